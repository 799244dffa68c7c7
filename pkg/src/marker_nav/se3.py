"""Rigid transforms in SE(3) and the planar (x, y, yaw) lift used by the filter.

Frame convention: a ``RigidTransform`` named ``t_ab`` maps coordinates in
frame {b} to frame {a}: ``p_a = R @ p_b + t``.  The vehicle pose used by the
estimator, ``t_vw``, maps *world* points into the *vehicle* frame, so the
vehicle's placement in the world is ``invert(t_vw)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_rotation, check_vector

_ORTHO_DRIFT = 1e-12


def wrap_angle(angle):
    """Wrap an angle (scalar or array) into the half-open interval (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    wrapped = np.pi - np.mod(np.pi - a, 2.0 * np.pi)
    # leave in-range angles bit-exact
    wrapped = np.where((a > -np.pi) & (a <= np.pi), a, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx(yaw, pitch=0.0, roll=0.0):
    """Rotation for intrinsic Z-Y-X (yaw, pitch, roll) Euler angles."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def exp_so3(omega):
    """Rodrigues' formula: rotation vector -> rotation matrix."""
    omega = np.asarray(omega, dtype=float)
    theta = math.sqrt(float(omega @ omega))
    K = skew(omega)
    if theta < 1e-8:
        # second-order series keeps the map smooth at zero
        return np.eye(3) + K + 0.5 * (K @ K)
    return (
        np.eye(3)
        + (math.sin(theta) / theta) * K
        + ((1.0 - math.cos(theta)) / theta**2) * (K @ K)
    )


def rotation_angle(R):
    """Geodesic angle of a rotation matrix, in [0, pi]."""
    # atan2 keeps full precision near 0 where acos of the trace loses ~1e-8
    s = 0.5 * math.sqrt((R[2, 1] - R[1, 2]) ** 2 + (R[0, 2] - R[2, 0]) ** 2 + (R[1, 0] - R[0, 1]) ** 2)
    c = 0.5 * (np.trace(R) - 1.0)
    return math.atan2(s, c)


def orthonormalize(R):
    """Project a near-rotation onto SO(3) (closest in Frobenius norm)."""
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    return U @ D @ Vt


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """An element of SE(3): 3x3 rotation plus a translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix):
        M = np.asarray(matrix, dtype=float)
        if M.shape != (4, 4):
            raise ValueError(f"homogeneous matrix must be 4x4, got {M.shape}")
        return cls(M[:3, :3], M[:3, 3])

    @classmethod
    def checked(cls, rotation, translation):
        """Construct after verifying the rotation is orthonormal with det 1."""
        return cls(check_rotation(rotation), check_vector(translation, 3, "translation"))

    def as_matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def __matmul__(self, other):
        if isinstance(other, RigidTransform):
            return compose(self, other)
        return transform_point(self, other)

    def __repr__(self):
        return (
            f"RigidTransform(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


@dataclass(frozen=True)
class PlanarState:
    """Vehicle position (m) and yaw (rad) in the world frame."""

    x: float
    y: float
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "psi", wrap_angle(self.psi))

    def as_array(self):
        return np.array([self.x, self.y, self.psi])


def compose(a, b):
    """Group product: the returned transform maps p to a(b(p))."""
    R = a.rotation @ b.rotation
    if np.max(np.abs(R.T @ R - np.eye(3))) > _ORTHO_DRIFT:
        R = orthonormalize(R)
    return RigidTransform(R, a.rotation @ b.translation + a.translation)


def invert(t):
    Rt = t.rotation.T
    return RigidTransform(Rt, -Rt @ t.translation)


def transform_point(t, p):
    """Apply ``t`` to a 3-vector or to an (N, 3) array of points."""
    p = np.asarray(p, dtype=float)
    return p @ t.rotation.T + t.translation


def pose_in_world(s):
    """Placement of the vehicle in the world frame for a planar state."""
    return RigidTransform(euler_zyx(s.psi), np.array([s.x, s.y, 0.0]))


def from_planar(s):
    """World-to-vehicle transform for a planar state (z, pitch and roll zero)."""
    return invert(pose_in_world(s))


def to_planar(t):
    """Extract (x, y, yaw) from a world-to-vehicle transform.

    Yaw is ``atan2(R[1, 0], R[0, 0])`` of the vehicle's rotation in the world,
    which is exact for a pure yaw and insensitive to small roll/pitch.
    """
    pose = invert(t)
    R = pose.rotation
    return PlanarState(pose.translation[0], pose.translation[1], math.atan2(R[1, 0], R[0, 0]))


def rotation_distance(a, b):
    """Geodesic angle between the rotations of two transforms."""
    return rotation_angle(a.rotation.T @ b.rotation)
