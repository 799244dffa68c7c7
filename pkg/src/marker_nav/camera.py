"""Pinhole cameras, the four-camera rig and the joint reprojection error.

Camera frames follow the usual optical convention (x right, y down, z along
the optical axis).  The vehicle frame is x forward, y left, z up.  Cameras are
indexed 1..4 clockwise from the front when looking down on the vehicle.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_positive
from .exceptions import BehindCamera
from .se3 import RigidTransform, compose, invert, transform_point

ALLOWED_VISIBLE_SETS = frozenset(
    [(1,), (2,), (3,), (4,), (1, 2), (2, 3), (3, 4), (1, 4)]
)

# mount yaw of each camera in the vehicle frame, clockwise from the front
DEFAULT_MOUNT_YAWS = (0.0, -math.pi / 2, math.pi, math.pi / 2)


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        check_positive(self.fx, "fx")
        check_positive(self.fy, "fy")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def normalize(self, pixels):
        """Remove the intrinsics: pixels (N, 2) -> normalized image coordinates."""
        pixels = np.asarray(pixels, dtype=float)
        return np.column_stack(
            [(pixels[:, 0] - self.cx) / self.fx, (pixels[:, 1] - self.cy) / self.fy]
        )

    def in_bounds(self, pixels):
        pixels = np.atleast_2d(pixels)
        return bool(
            np.all(
                (pixels[:, 0] >= 0)
                & (pixels[:, 0] < self.width)
                & (pixels[:, 1] >= 0)
                & (pixels[:, 1] < self.height)
            )
        )


def mount_extrinsic(yaw, position):
    """Vehicle-to-camera transform for a horizontal camera looking along ``yaw``.

    ``position`` is the camera centre in the vehicle frame (m).
    """
    c, s = math.cos(yaw), math.sin(yaw)
    # columns: camera x (right), y (down), z (forward) expressed in the vehicle frame
    R_vc = np.array([[s, 0.0, c], [-c, 0.0, s], [0.0, -1.0, 0.0]])
    position = np.asarray(position, dtype=float)
    return RigidTransform(R_vc.T, -R_vc.T @ position)


@dataclass(frozen=True)
class CameraRig:
    """Ordered (intrinsics, vehicle-to-camera extrinsic) pairs, cameras 1..4."""

    cameras: tuple

    def __post_init__(self):
        cams = tuple((intr, ext) for intr, ext in self.cameras)
        if len(cams) != 4:
            raise ValueError(f"a rig holds exactly 4 cameras, got {len(cams)}")
        object.__setattr__(self, "cameras", cams)

    def intrinsics(self, j):
        return self.cameras[j - 1][0]

    def extrinsic(self, j):
        return self.cameras[j - 1][1]

    def camera_from_world(self, j, t_vw):
        return compose(self.extrinsic(j), t_vw)


def default_rig(fx=460.0, fy=460.0, width=640, height=480, mount_offset=0.10, mount_height=0.226):
    """Four identical horizontal cameras at 0, -90, 180 and +90 degrees of yaw.

    Each camera sits ``mount_offset`` metres out from the vehicle centre along
    its optical axis, at ``mount_height`` above the ground.
    """
    cameras = []
    for yaw in DEFAULT_MOUNT_YAWS:
        intr = Intrinsics(fx, fy, width / 2.0, height / 2.0, width, height)
        position = [mount_offset * math.cos(yaw), mount_offset * math.sin(yaw), mount_height]
        cameras.append((intr, mount_extrinsic(yaw, position)))
    return CameraRig(tuple(cameras))


@dataclass(frozen=True, eq=False)
class MarkerModel:
    """A square planar marker given by its four ordered world corners.

    The marker's local frame has its origin at the centroid, x along corner
    1 -> 2, y along corner 1 -> 4 and z = x cross y.  For a marker read in the
    usual top-left, top-right, bottom-right, bottom-left order, z points into
    the marker, away from a camera that can see its printed face.
    """

    corners_world: np.ndarray
    side_length: float = None
    local_from_world: RigidTransform = field(init=False, repr=False)
    corners_local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.array(self.corners_world, dtype=float)
        if P.shape != (4, 3):
            raise ValueError(f"corners_world must be 4x3, got {P.shape}")
        sides = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
        side = float(sides[0]) if self.side_length is None else float(self.side_length)
        if np.max(np.abs(sides - side)) > 1e-9:
            raise ValueError("consecutive corner distances must equal side_length")
        centroid = P.mean(axis=0)
        _, sv, Vt = np.linalg.svd(P - centroid)
        if sv[1] < 1e-9:
            raise ValueError("marker corners are collinear")
        if np.max(np.abs((P - centroid) @ Vt[2])) > 1e-9:
            raise ValueError("marker corners are not coplanar")
        x_axis = P[1] - P[0]
        x_axis /= np.linalg.norm(x_axis)
        y_axis = P[3] - P[0]
        y_axis -= (y_axis @ x_axis) * x_axis
        y_axis /= np.linalg.norm(y_axis)
        R_wm = np.column_stack([x_axis, y_axis, np.cross(x_axis, y_axis)])
        world_from_local = RigidTransform(R_wm, centroid)
        P.flags.writeable = False
        object.__setattr__(self, "corners_world", P)
        object.__setattr__(self, "side_length", side)
        object.__setattr__(self, "local_from_world", invert(world_from_local))
        local = transform_point(self.local_from_world, P)
        local[:, 2] = 0.0
        local.flags.writeable = False
        object.__setattr__(self, "corners_local", local)

    @classmethod
    def square(cls, side_length, world_from_local=None):
        """A square marker of the given side, placed by ``world_from_local``."""
        h = side_length / 2.0
        local = np.array([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])
        if world_from_local is not None:
            local = transform_point(world_from_local, local)
        return cls(local, side_length)

    @property
    def world_from_local(self):
        return invert(self.local_from_world)

    @property
    def center(self):
        return self.corners_world.mean(axis=0)

    @property
    def normal(self):
        """Unit normal pointing into the marker (away from its printed face)."""
        return self.local_from_world.rotation[2]


@dataclass(frozen=True)
class CornerProjection:
    camera_index: int
    corner_index: int
    pixel: tuple
    depth: float


@dataclass(frozen=True, eq=False)
class MarkerObservation:
    """Measured pixel corners per camera: ``{camera_index: (4, 2) array}``."""

    corners: dict

    def __post_init__(self):
        corners = {}
        for j, pix in sorted(self.corners.items()):
            pix = np.array(pix, dtype=float)
            if pix.shape != (4, 2):
                raise ValueError(f"camera {j} must carry exactly 4 corners, got {pix.shape}")
            pix.flags.writeable = False
            corners[int(j)] = pix
        if tuple(corners) not in ALLOWED_VISIBLE_SETS:
            raise ValueError(f"visible set {tuple(corners)} is not a single or adjacent pair")
        object.__setattr__(self, "corners", corners)

    @property
    def visible_set(self):
        return tuple(self.corners)

    def __eq__(self, other):
        return (
            isinstance(other, MarkerObservation)
            and self.visible_set == other.visible_set
            and all(np.array_equal(self.corners[j], other.corners[j]) for j in self.corners)
        )


def project_points(intr, cam_from_world, points):
    """Vectorised pinhole projection; returns (pixels (N, 2), depths (N,))."""
    pc = transform_point(cam_from_world, np.atleast_2d(points))
    Z = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.fx * pc[:, 0] / Z + intr.cx
        v = intr.fy * pc[:, 1] / Z + intr.cy
    return np.column_stack([u, v]), Z


def project(intr, cam_from_world, p_world):
    """Project one world point; raises BehindCamera when depth <= 0."""
    pixels, depth = project_points(intr, cam_from_world, p_world)
    if not depth[0] > 0:
        raise BehindCamera(f"point at depth {depth[0]:.6g} m")
    return CornerProjection(0, 0, (float(pixels[0, 0]), float(pixels[0, 1])), float(depth[0]))


def _camera_sees(intr, cam_from_world, marker, pixels, depths):
    if not np.all(depths > 0) or not intr.in_bounds(pixels):
        return False
    centre = invert(cam_from_world).translation
    return float((marker.center - centre) @ marker.normal) > 0


def visible_projections(rig, t_vw, marker):
    """``{j: (pixels, depths)}`` for every camera that sees the whole marker face."""
    out = {}
    for j in range(1, 5):
        T = rig.camera_from_world(j, t_vw)
        intr = rig.intrinsics(j)
        pixels, depths = project_points(intr, T, marker.corners_world)
        if _camera_sees(intr, T, marker, pixels, depths):
            out[j] = (pixels, depths)
    return out


def project_rig(rig, t_vw, marker):
    """All corner projections for cameras that see the full, front-facing marker."""
    result = []
    for j, (pixels, depths) in visible_projections(rig, t_vw, marker).items():
        for i in range(4):
            result.append(
                CornerProjection(j, i + 1, (float(pixels[i, 0]), float(pixels[i, 1])), float(depths[i]))
            )
    return result


def reprojection_residuals(rig, t_vw, marker, obs):
    """Stacked (predicted - measured) pixel residuals over the visible cameras.

    Returns ``None`` if any corner falls on or behind a camera's image plane.
    """
    blocks = []
    for j, measured in obs.corners.items():
        pixels, depths = project_points(
            rig.intrinsics(j), rig.camera_from_world(j, t_vw), marker.corners_world
        )
        if not np.all(depths > 0):
            return None
        blocks.append((pixels - measured).ravel())
    return np.concatenate(blocks)


def reprojection_error(rig, t_vw, marker, obs):
    """Joint squared pixel error over the cameras in ``obs.visible_set``.

    A pose that puts any corner behind an observing camera costs ``inf``.
    """
    if not obs.visible_set:
        raise ValueError("observation has no visible cameras")
    r = reprojection_residuals(rig, t_vw, marker, obs)
    if r is None:
        return math.inf
    return float(r @ r)


def quad_area(pixels):
    """Shoelace area of a pixel quadrilateral."""
    x, y = pixels[:, 0], pixels[:, 1]
    return 0.5 * abs(float(x @ np.roll(y, -1) - y @ np.roll(x, -1)))
