"""Kinematic bicycle model with the centre of gravity at mid-wheelbase."""

from dataclasses import dataclass
import math

from ._validation import check_positive
from .se3 import PlanarState, wrap_angle


@dataclass(frozen=True)
class BicycleParams:
    wheelbase_l: float = 0.256
    steering_limit: float = 0.5
    lf: float = None
    lr: float = None

    def __post_init__(self):
        check_positive(self.wheelbase_l, "wheelbase_l")
        check_positive(self.steering_limit, "steering_limit")
        half = self.wheelbase_l / 2.0
        object.__setattr__(self, "lf", half if self.lf is None else float(self.lf))
        object.__setattr__(self, "lr", half if self.lr is None else float(self.lr))


@dataclass(frozen=True)
class OdometryReading:
    v_w: float
    delta_r: float


@dataclass(frozen=True)
class WorldVelocity:
    vx: float
    vy: float
    psi_dot: float


def sideslip(delta_r):
    """Sideslip angle beta = atan(tan(delta) / 2) for equal axle distances."""
    return math.atan(0.5 * math.tan(delta_r))


def turning_radius(delta_r, params):
    """Radius of the arc traced by the vehicle centre; ``inf`` when straight."""
    denom = math.cos(sideslip(delta_r)) * math.tan(delta_r)
    return math.inf if denom == 0 else params.wheelbase_l / denom


def yaw_rate(v_w, delta_r, params):
    # v / R written without the 1/R singularity at zero steer
    return v_w * math.cos(sideslip(delta_r)) * math.tan(delta_r) / params.wheelbase_l


def body_to_world(v_w, delta_r, psi, params=None):
    params = params or BicycleParams()
    heading = sideslip(delta_r) + psi
    return WorldVelocity(
        v_w * math.cos(heading), v_w * math.sin(heading), yaw_rate(v_w, delta_r, params)
    )


def integrate(state, v_w, delta_r, dt, params):
    """One explicit Euler step of the bicycle model."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    vel = body_to_world(v_w, delta_r, state.psi, params)
    return PlanarState(
        state.x + vel.vx * dt, state.y + vel.vy * dt, wrap_angle(state.psi + vel.psi_dot * dt)
    )
