"""Linear Kalman filter over [x, y, psi, vx, vy, psi_dot] with H = I."""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_covariance, check_vector
from .exceptions import SingularInnovation
from .kinematics import body_to_world
from .se3 import to_planar, wrap_angle

DEFAULT_Q_DIAG = (1e-4, 1e-4, 1e-4, 1e-2, 1e-2, 1e-2)
DEFAULT_R_DIAG = (2.5e-3, 2.5e-3, 4e-3, 1e-2, 1e-2, 1e-2)
DEFAULT_P0_DIAG = (0.25, 0.25, 0.25, 1.0, 1.0, 1.0)
MASKED_VARIANCE = 1e12

_POSE = slice(0, 3)
_PSI = 2


@dataclass(frozen=True, eq=False)
class FilterState:
    x_hat: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_hat", check_vector(self.x_hat, 6, "x_hat").copy())
        object.__setattr__(self, "P", np.array(self.P, dtype=float).reshape(6, 6))


@dataclass(frozen=True, eq=False)
class NoiseConfig:
    Q: np.ndarray = field(default_factory=lambda: np.diag(DEFAULT_Q_DIAG))
    R: np.ndarray = field(default_factory=lambda: np.diag(DEFAULT_R_DIAG))

    def __post_init__(self):
        object.__setattr__(self, "Q", check_covariance(self.Q, "Q"))
        object.__setattr__(self, "R", check_covariance(self.R, "R"))


@dataclass(frozen=True, eq=False)
class Observation:
    z: np.ndarray
    pose_part_valid: bool = True

    def __post_init__(self):
        z = check_vector(self.z, 6, "z").copy()
        z[_PSI] = wrap_angle(z[_PSI])
        object.__setattr__(self, "z", z)


def transition(dt):
    A = np.eye(6)
    A[0:3, 3:6] = dt * np.eye(3)
    return A


def _symmetrize(P):
    return 0.5 * (P + P.T)


def predict(s, dt, noise):
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    A = transition(dt)
    x = A @ s.x_hat
    x[_PSI] = wrap_angle(x[_PSI])
    return FilterState(x, _symmetrize(A @ s.P @ A.T + noise.Q))


def update(s, z, noise):
    """Measurement update with H = I.

    When the camera missed the marker the pose rows of R are inflated so the
    fixed-shape update leaves the pose essentially untouched.
    """
    R = noise.R.copy()
    if not z.pose_part_valid:
        R[_POSE, :] = 0.0
        R[:, _POSE] = 0.0
        R[_POSE, _POSE] = np.eye(3) * MASKED_VARIANCE
    S = s.P + R
    try:
        if np.linalg.cond(S) > 1e15:
            raise np.linalg.LinAlgError
        K = np.linalg.solve(S.T, s.P.T).T
    except np.linalg.LinAlgError:
        raise SingularInnovation("P + R is singular") from None
    innovation = z.z - s.x_hat
    innovation[_PSI] = wrap_angle(innovation[_PSI])
    if not z.pose_part_valid:
        innovation[_POSE] = 0.0
    x = s.x_hat + K @ innovation
    x[_PSI] = wrap_angle(x[_PSI])
    return FilterState(x, _symmetrize((np.eye(6) - K) @ s.P))


def assemble_observation(selected_pose, odo, psi_ref, params=None):
    """Stack the camera planar pose with the odometry world velocity.

    ``selected_pose=None`` produces an observation with the pose part masked.
    """
    vel = body_to_world(odo.v_w, odo.delta_r, psi_ref, params)
    if selected_pose is None:
        pose = (0.0, 0.0, 0.0)
        valid = False
    else:
        p = to_planar(selected_pose)
        pose = (p.x, p.y, p.psi)
        valid = True
    return Observation(np.array([*pose, vel.vx, vel.vy, vel.psi_dot]), valid)


def initial_state(selected_pose, P0=DEFAULT_P0_DIAG):
    p = to_planar(selected_pose)
    return FilterState(np.array([p.x, p.y, p.psi, 0.0, 0.0, 0.0]), check_covariance(P0, "P0"))
