"""Ackermann lateral steering and PI longitudinal throttle toward waypoints."""

from dataclasses import dataclass
import math

from ._validation import check_positive
from .exceptions import AtWaypoint
from .se3 import wrap_angle


@dataclass(frozen=True)
class Waypoint:
    X_d: float
    Y_d: float
    r: float = 0.10

    def __post_init__(self):
        check_positive(self.r, "waypoint radius")


@dataclass(frozen=True)
class ControllerGains:
    p1: float = 0.3
    p2: float = 0.005
    u_max: float = 1.0

    def __post_init__(self):
        check_positive(self.p1, "p1", strict=False)
        check_positive(self.p2, "p2", strict=False)
        check_positive(self.u_max, "u_max")


@dataclass(frozen=True)
class ControlCommand:
    delta_rd: float
    u: float


def distance_to(state, wp):
    return math.hypot(wp.X_d - state.x, wp.Y_d - state.y)


def lookahead_angle(state, beta, wp):
    """Bearing to the waypoint relative to the velocity direction psi + beta."""
    if distance_to(state, wp) < 1e-9:
        raise AtWaypoint(f"vehicle is on waypoint ({wp.X_d}, {wp.Y_d})")
    return wrap_angle(math.atan2(wp.Y_d - state.y, wp.X_d - state.x) - state.psi - beta)


def steering_command(alpha, L_d, beta, params):
    if not L_d > 0:
        raise ValueError(f"L_d must be > 0, got {L_d}")
    delta = math.atan(2.0 * params.wheelbase_l * math.sin(alpha) / (L_d * math.cos(beta)))
    return max(-params.steering_limit, min(params.steering_limit, delta))


def throttle_command(L_d, accumulator, gains):
    """PI throttle on the distance to the waypoint.

    Returns ``(u, new_accumulator)``.  The accumulator is capped so that the
    integral term alone never exceeds ``u_max``.
    """
    acc = accumulator + L_d
    if gains.p2 > 0:
        acc = min(acc, gains.u_max / gains.p2)
    u = gains.p1 * L_d + gains.p2 * acc
    return max(0.0, min(gains.u_max, u)), acc


def waypoint_reached(state, wp):
    return distance_to(state, wp) <= wp.r
