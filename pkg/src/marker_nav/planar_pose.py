"""Planar pose front end: 4-point homography, the two-solution IPPE
decomposition, lifting to vehicle-pose candidates and Levenberg-Marquardt
refinement of the joint multi-camera reprojection error.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np

from .camera import MarkerObservation, quad_area, reprojection_error, reprojection_residuals
from .exceptions import DegenerateConfiguration, NoValidPose
from .se3 import RigidTransform, compose, exp_so3, invert, orthonormalize, transform_point

_COLLINEAR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AmbiguousPosePair:
    """Two LM-refined world-to-vehicle candidates and their reprojection errors.

    ``pose_a`` is the candidate with the lower reprojection error.
    """

    pose_a: RigidTransform
    pose_b: RigidTransform
    e1_a: float
    e1_b: float
    seed_camera: int = 0

    def __iter__(self):
        return iter((self.pose_a, self.pose_b))


@dataclass(frozen=True)
class LMOptions:
    max_iter: int = 100
    step_tol: float = 1e-10
    rel_cost_tol: float = 1e-12
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0


@dataclass(frozen=True)
class LMInfo:
    cost: float
    initial_cost: float
    iterations: int
    converged: bool


def _check_not_collinear(points, what):
    for a, b, c in itertools.combinations(range(4), 3):
        d1 = points[b] - points[a]
        d2 = points[c] - points[a]
        base = max(np.linalg.norm(d1), np.linalg.norm(d2))
        if base == 0:
            raise DegenerateConfiguration(f"repeated {what} points")
        # height of the triangle over its longest edge from a
        if abs(d1[0] * d2[1] - d1[1] * d2[0]) / base <= _COLLINEAR_TOL:
            raise DegenerateConfiguration(f"{what} points {a}, {b}, {c} are collinear")


def _similarity(points):
    centroid = points.mean(axis=0)
    scale = math.sqrt(2.0) / np.mean(np.linalg.norm(points - centroid, axis=1))
    return np.array(
        [[scale, 0.0, -scale * centroid[0]], [0.0, scale, -scale * centroid[1]], [0.0, 0.0, 1.0]]
    )


def estimate_homography(model_xy, pixels_normalized):
    """Exact 4-point DLT mapping model (x, y, 1) to normalized image points.

    The result is scaled so that ``H[2, 2] == 1`` (or to unit Frobenius norm
    when that entry vanishes).
    """
    X = np.asarray(model_xy, dtype=float)
    x = np.asarray(pixels_normalized, dtype=float)
    if X.shape != (4, 2) or x.shape != (4, 2):
        raise ValueError("expected two (4, 2) point arrays")
    _check_not_collinear(X, "model")
    _check_not_collinear(x, "image")

    Tm, Ti = _similarity(X), _similarity(x)
    Xn = X @ Tm[:2, :2].T + Tm[:2, 2]
    xn = x @ Ti[:2, :2].T + Ti[:2, 2]
    A = np.zeros((8, 9))
    for k in range(4):
        X1, Y1 = Xn[k]
        u, v = xn[k]
        A[2 * k] = [X1, Y1, 1.0, 0.0, 0.0, 0.0, -u * X1, -u * Y1, -u]
        A[2 * k + 1] = [0.0, 0.0, 0.0, X1, Y1, 1.0, -v * X1, -v * Y1, -v]
    _, _, Vt = np.linalg.svd(A)
    H = np.linalg.solve(Ti, Vt[-1].reshape(3, 3) @ Tm)
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]
    else:
        H = H / np.linalg.norm(H)
    if abs(np.linalg.det(H)) <= 1e-12:
        raise DegenerateConfiguration("homography is rank deficient")
    return H


def apply_homography(H, points_xy):
    ph = np.column_stack([points_xy, np.ones(len(points_xy))]) @ H.T
    return ph[:, :2] / ph[:, 2:3]


def _rotation_to_z(v):
    """Rotation that takes the unit vector ``v`` onto +z."""
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(v, z)
    s = np.linalg.norm(axis)
    c = float(v @ z)
    if s < 1e-15:
        return np.eye(3)
    return exp_so3(axis / s * math.atan2(s, c))


def _ippe_rotations(H):
    """The two marker-to-camera rotations consistent with H's first-order
    behaviour at the model origin."""
    v = H[:2, 2] / H[2, 2]
    # Jacobian of the homography at model point (0, 0)
    J = (H[:2, :2] - np.outer(v, H[2, :2])) / H[2, 2]
    vbar = np.array([v[0], v[1], 1.0])
    Rv = _rotation_to_z(vbar / np.linalg.norm(vbar))
    M = np.hstack([np.eye(2), -v[:, None]]) @ Rv.T
    A = np.linalg.solve(M[:, :2], J)
    gamma = np.linalg.svd(A, compute_uv=False)[0]
    Rt = A / gamma
    b0 = math.sqrt(max(0.0, 1.0 - Rt[0, 0] ** 2 - Rt[1, 0] ** 2))
    b1 = math.sqrt(max(0.0, 1.0 - Rt[0, 1] ** 2 - Rt[1, 1] ** 2))
    if -(Rt[0, 0] * Rt[0, 1] + Rt[1, 0] * Rt[1, 1]) < 0:
        b1 = -b1
    rotations = []
    for sign in (1.0, -1.0):
        c1 = np.array([Rt[0, 0], Rt[1, 0], sign * b0])
        c2 = np.array([Rt[0, 1], Rt[1, 1], sign * b1])
        R_local = orthonormalize(np.column_stack([c1, c2, np.cross(c1, c2)]))
        rotations.append(Rv.T @ R_local)
    return rotations


def _translation_for(R, model_xy, image):
    """Least-squares translation given the rotation (linear in t)."""
    P = np.column_stack([model_xy, np.zeros(len(model_xy))]) @ R.T
    A = np.zeros((2 * len(P), 3))
    b = np.zeros(2 * len(P))
    A[0::2, 0] = 1.0
    A[0::2, 2] = -image[:, 0]
    A[1::2, 1] = 1.0
    A[1::2, 2] = -image[:, 1]
    b[0::2] = image[:, 0] * P[:, 2] - P[:, 0]
    b[1::2] = image[:, 1] * P[:, 2] - P[:, 1]
    return np.linalg.lstsq(A, b, rcond=None)[0]


def decompose_planar(H, model_xy=None, image=None):
    """Two camera-from-marker poses for a plane-induced homography.

    ``model_xy`` must be centred on the model origin.  When the
    correspondences are omitted the translation is fitted to H's images of a
    unit square around the origin.
    """
    if model_xy is None:
        model_xy = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    model_xy = np.asarray(model_xy, dtype=float)
    image = apply_homography(H, model_xy) if image is None else np.asarray(image, dtype=float)
    poses = []
    for R in _ippe_rotations(H):
        t = _translation_for(R, model_xy, image)
        depths = np.column_stack([model_xy, np.zeros(len(model_xy))]) @ R[2] + t[2]
        if t[2] > 0 and np.all(depths > 0):
            poses.append(RigidTransform(R, t))
    if not poses:
        raise NoValidPose("no candidate places the marker in front of the camera")
    if len(poses) == 1:
        poses.append(poses[0])
    return poses[0], poses[1]


def _retract(t, delta):
    """Left perturbation: (Exp(omega), rho) composed onto ``t``."""
    return compose(RigidTransform(exp_so3(delta[:3]), delta[3:]), t)


def reprojection_jacobian(rig, t_vw, marker, obs):
    """Residuals and their Jacobian w.r.t. the 6-vector local update
    (rotation vector, then translation) of ``_retract``."""
    q = transform_point(t_vw, marker.corners_world)
    # d q / d delta for every corner: [-[q]x | I], shape (4, 3, 6)
    dq = np.zeros((len(q), 3, 6))
    dq[:, 0, 1], dq[:, 0, 2] = q[:, 2], -q[:, 1]
    dq[:, 1, 0], dq[:, 1, 2] = -q[:, 2], q[:, 0]
    dq[:, 2, 0], dq[:, 2, 1] = q[:, 1], -q[:, 0]
    dq[:, 0, 3] = dq[:, 1, 4] = dq[:, 2, 5] = 1.0
    residuals, blocks = [], []
    for j, measured in obs.corners.items():
        intr = rig.intrinsics(j)
        ext = rig.extrinsic(j)
        c = transform_point(ext, q)
        X, Y, Z = c[:, 0], c[:, 1], c[:, 2]
        if not np.all(Z > 0):
            return None, None
        iz = 1.0 / Z
        u = intr.fx * X * iz + intr.cx
        v = intr.fy * Y * iz + intr.cy
        residuals.append((np.column_stack([u, v]) - measured).ravel())
        dproj = np.zeros((len(q), 2, 3))
        dproj[:, 0, 0] = intr.fx * iz
        dproj[:, 0, 2] = -intr.fx * X * iz * iz
        dproj[:, 1, 1] = intr.fy * iz
        dproj[:, 1, 2] = -intr.fy * Y * iz * iz
        blocks.append((dproj @ ext.rotation @ dq).reshape(-1, 6))
    return np.concatenate(residuals), np.concatenate(blocks)


def lm_refine(initial, rig, marker, obs, opts=None, full_output=False):
    """Levenberg-Marquardt minimisation of the joint reprojection error.

    Returns the refined world-to-vehicle pose; with ``full_output=True``
    returns ``(pose, LMInfo)``.  A run that hits ``max_iter`` returns the
    best iterate with ``converged=False``.
    """
    opts = opts or LMOptions()
    pose = initial
    r, J = reprojection_jacobian(rig, pose, marker, obs)
    if r is None:
        raise ValueError("initial pose has infinite reprojection error")
    cost = float(r @ r)
    initial_cost = cost
    lam = opts.lambda0
    converged = False
    it = 0
    while it < opts.max_iter:
        it += 1
        if cost == 0.0:
            converged = True
            break
        g = J.T @ r
        A = J.T @ J
        d = np.diag(A)
        damping = lam * np.diag(np.maximum(d, 1e-12 * max(float(d.max()), 1.0)))
        try:
            step = np.linalg.solve(A + damping, -g)
        except np.linalg.LinAlgError:
            lam *= opts.lambda_up
            continue
        if np.linalg.norm(step) < opts.step_tol:
            converged = True
            break
        candidate = _retract(pose, step)
        r_new, J_new = reprojection_jacobian(rig, candidate, marker, obs)
        cost_new = math.inf if r_new is None else float(r_new @ r_new)
        if cost_new < cost:
            rel = (cost - cost_new) / cost
            pose, r, J, cost = candidate, r_new, J_new, cost_new
            lam = max(lam / opts.lambda_down, 1e-12)
            if rel < opts.rel_cost_tol:
                converged = True
                break
        else:
            lam *= opts.lambda_up
            if lam > 1e16:
                converged = True
                break
    if full_output:
        return pose, LMInfo(cost, initial_cost, it, converged)
    return pose


def seed_camera(obs):
    """Camera whose observed corners span the largest pixel area."""
    return max(obs.visible_set, key=lambda j: (quad_area(obs.corners[j]), -j))


def camera_candidates(rig, marker, obs, j):
    """IPPE camera-from-marker candidates for camera ``j``'s corners."""
    intr = rig.intrinsics(j)
    image = intr.normalize(obs.corners[j])
    model_xy = marker.corners_local[:, :2]
    H = estimate_homography(model_xy, image)
    return decompose_planar(H, model_xy, image)


def vehicle_pose_from_camera(rig, marker, j, cam_from_marker):
    """World-to-vehicle transform implied by a camera-from-marker pose."""
    return compose(invert(rig.extrinsic(j)), compose(cam_from_marker, marker.local_from_world))


def candidates_vehicle_world(rig, marker, obs, opts=None):
    """Both refined vehicle-pose candidates for one marker observation."""
    if not obs.visible_set:
        raise ValueError("observation has no visible cameras")
    j = seed_camera(obs)
    seeds = [vehicle_pose_from_camera(rig, marker, j, T) for T in camera_candidates(rig, marker, obs, j)]
    refined = []
    for seed in seeds:
        if not math.isfinite(reprojection_error(rig, seed, marker, obs)):
            # the seed camera alone always admits a finite cost
            seed = lm_refine(seed, rig, marker, MarkerObservation({j: obs.corners[j]}), opts)
            if reprojection_residuals(rig, seed, marker, obs) is None:
                refined.append((seed, math.inf))
                continue
        pose = lm_refine(seed, rig, marker, obs, opts)
        refined.append((pose, reprojection_error(rig, pose, marker, obs)))
    if all(not math.isfinite(e) for _, e in refined):
        raise NoValidPose("both candidates put corners behind an observing camera")
    (pa, ea), (pb, eb) = sorted(refined, key=lambda item: item[1])
    return AmbiguousPosePair(pa, pb, ea, eb, seed_camera=j)
