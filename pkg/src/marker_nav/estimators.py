"""scikit-learn style wrappers over the functional core.

``MarkerPoseEstimator`` turns marker observations into ambiguous candidate
pairs (``transform``) and selected poses (``predict``).  ``PlanarPoseFilter``
runs the constant-velocity filter over a sequence of stacked observations.
Both follow the usual conventions: hyperparameters in ``__init__``, learned
or validated state in trailing-underscore attributes, ``fit`` returns self.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_positive
from .camera import CameraRig, MarkerModel, MarkerObservation, default_rig
from .disambiguation import choose, object_space_error, total_cost
from .exceptions import BothInvalid, DegenerateConfiguration, NoValidPose
from .fusion import (
    DEFAULT_P0_DIAG,
    DEFAULT_Q_DIAG,
    DEFAULT_R_DIAG,
    FilterState,
    NoiseConfig,
    Observation,
    predict,
    update,
)
from .planar_pose import LMOptions, candidates_vehicle_world
from .se3 import PlanarState, RigidTransform, from_planar, wrap_angle
from .simulator import PAPER_MARKER_CORNERS, POLICIES

_CANDIDATE_ERRORS = (NoValidPose, DegenerateConfiguration)


def _as_transform(prior):
    """Accept a world-to-vehicle transform, a PlanarState or a FilterState."""
    if isinstance(prior, RigidTransform):
        return prior
    if isinstance(prior, PlanarState):
        return from_planar(prior)
    if isinstance(prior, FilterState):
        return from_planar(PlanarState(*prior.x_hat[:3]))
    arr = np.asarray(prior, dtype=float).ravel()
    if arr.shape[0] >= 3:
        return from_planar(PlanarState(*arr[:3]))
    raise TypeError(f"cannot interpret {type(prior).__name__} as a prior pose")


class MarkerPoseEstimator(BaseEstimator, TransformerMixin):
    """Candidate generation and selection for a fixed rig and marker.

    Parameters
    ----------
    rig : CameraRig, optional
        Defaults to the four-camera reference rig.
    marker : MarkerModel, optional
        Defaults to the reference marker.
    policy : {"ours", "method_a"}
        "ours" adds the object-space distance to a prior pose; "method_a"
        keeps the candidate with the lower reprojection error.
    e2_weight : float
        Scale of the object-space term in the total cost.
    max_iter : int
        Levenberg-Marquardt iteration cap.
    """

    def __init__(self, rig=None, marker=None, policy="ours", e2_weight=1.0e4, max_iter=100):
        self.rig = rig
        self.marker = marker
        self.policy = policy
        self.e2_weight = e2_weight
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        rig = default_rig() if self.rig is None else self.rig
        marker = MarkerModel(np.array(PAPER_MARKER_CORNERS)) if self.marker is None else self.marker
        if not isinstance(rig, CameraRig):
            raise TypeError("rig must be a CameraRig")
        if not isinstance(marker, MarkerModel):
            raise TypeError("marker must be a MarkerModel")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        check_positive(self.e2_weight, "e2_weight", strict=False)
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        self.rig_ = rig
        self.marker_ = marker
        self.lm_options_ = LMOptions(max_iter=int(self.max_iter))
        return self

    def _observations(self, X):
        if isinstance(X, MarkerObservation) or X is None:
            X = [X]
        for obs in X:
            if obs is not None and not isinstance(obs, MarkerObservation):
                raise TypeError(f"expected MarkerObservation or None, got {type(obs).__name__}")
            yield obs

    def transform(self, X):
        """One ``AmbiguousPosePair`` per observation (None when unavailable)."""
        check_is_fitted(self, ["rig_", "marker_"])
        out = []
        for obs in self._observations(X):
            if obs is None:
                out.append(None)
                continue
            try:
                out.append(candidates_vehicle_world(self.rig_, self.marker_, obs, self.lm_options_))
            except _CANDIDATE_ERRORS:
                out.append(None)
        return out

    def costs(self, X, priors):
        """Per observation ``(cost_a, cost_b)`` against the given priors."""
        check_is_fitted(self, ["rig_", "marker_"])
        obs_list = list(self._observations(X))
        if len(priors) != len(obs_list):
            raise ValueError(f"got {len(priors)} priors for {len(obs_list)} observations")
        out = []
        for obs, pair, prior in zip(obs_list, self.transform(obs_list), priors):
            if pair is None:
                out.append(None)
                continue
            T = _as_transform(prior)
            out.append((
                total_cost(pair.pose_a, T, self.rig_, self.marker_, obs, "a", self.e2_weight, pair.e1_a),
                total_cost(pair.pose_b, T, self.rig_, self.marker_, obs, "b", self.e2_weight, pair.e1_b),
            ))
        return out

    def _choices(self, X, priors):
        obs_list = list(self._observations(X))
        pairs = self.transform(obs_list)
        if self.policy == "method_a":
            ids = []
            for pair in pairs:
                ok = pair is not None and (math.isfinite(pair.e1_a) or math.isfinite(pair.e1_b))
                ids.append("a" if ok else None)
            return pairs, ids
        if priors is None:
            raise ValueError('policy "ours" needs one prior pose per observation')
        ids = []
        for c in self.costs(obs_list, priors):
            try:
                ids.append(None if c is None else choose(*c))
            except BothInvalid:
                ids.append(None)
        return pairs, ids

    def predict(self, X, priors=None):
        """Selected world-to-vehicle pose per observation (None when unavailable)."""
        check_is_fitted(self, ["rig_", "marker_"])
        pairs, ids = self._choices(X, priors)
        return [None if i is None else (p.pose_a if i == "a" else p.pose_b) for p, i in zip(pairs, ids)]

    def score(self, X, y, priors=None):
        """Fraction of observations whose selected candidate is the one nearer ``y``."""
        check_is_fitted(self, ["rig_", "marker_"])
        pairs, ids = self._choices(X, priors)
        if len(y) != len(pairs):
            raise ValueError(f"got {len(y)} truths for {len(pairs)} observations")
        hits, n = 0, 0
        for pair, chosen, truth in zip(pairs, ids, y):
            if chosen is None:
                continue
            T = _as_transform(truth)
            da = object_space_error(pair.pose_a, T, self.marker_)
            db = object_space_error(pair.pose_b, T, self.marker_)
            hits += (da if chosen == "a" else db) <= min(da, db)
            n += 1
        return hits / n if n else float("nan")


class PlanarPoseFilter(BaseEstimator):
    """Constant-velocity Kalman filter over ``[x, y, psi, vx, vy, psi_dot]``.

    ``Z`` rows are stacked observations ``[x, y, psi, vx, vy, psi_dot]``;
    ``pose_valid`` marks rows whose pose part came from a camera.  The first
    row with a valid pose initialises the state.
    """

    def __init__(self, dt=1.0 / 11.0, Q_diag=DEFAULT_Q_DIAG, R_diag=DEFAULT_R_DIAG, P0_diag=DEFAULT_P0_DIAG):
        self.dt = dt
        self.Q_diag = Q_diag
        self.R_diag = R_diag
        self.P0_diag = P0_diag

    @staticmethod
    def _check_Z(Z, pose_valid):
        Z = np.asarray(Z, dtype=float)
        if Z.ndim != 2 or Z.shape[1] != 6:
            raise ValueError(f"Z must have shape (n, 6), got {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise ValueError("Z must be finite")
        if pose_valid is None:
            pose_valid = np.ones(len(Z), dtype=bool)
        pose_valid = np.asarray(pose_valid, dtype=bool)
        if pose_valid.shape != (len(Z),):
            raise ValueError("pose_valid must have one entry per row of Z")
        return Z, pose_valid

    def _run(self, state, Z, pose_valid):
        states = []
        for z, ok in zip(Z, pose_valid):
            prior = predict(state, self.dt, self.noise_)
            state = update(prior, Observation(z, bool(ok)), self.noise_)
            states.append(state)
        return states

    def fit(self, Z, pose_valid=None):
        check_positive(self.dt, "dt")
        Z, pose_valid = self._check_Z(Z, pose_valid)
        self.noise_ = NoiseConfig(np.asarray(self.Q_diag, float), np.asarray(self.R_diag, float))
        if not pose_valid.any():
            raise ValueError("at least one row needs a valid pose to initialise the filter")
        first = int(np.argmax(pose_valid))
        x0 = np.concatenate([Z[first, :3], np.zeros(3)])
        x0[2] = wrap_angle(x0[2])
        state = FilterState(x0, np.diag(np.asarray(self.P0_diag, float)))
        self.states_ = [state] + self._run(state, Z[first + 1:], pose_valid[first + 1:])
        self.x_hat_ = np.array([s.x_hat for s in self.states_])
        self.state_ = self.states_[-1]
        return self

    def transform(self, Z, pose_valid=None):
        """Continue filtering from the fitted state; returns ``(n, 6)`` estimates."""
        check_is_fitted(self, ["state_"])
        Z, pose_valid = self._check_Z(Z, pose_valid)
        states = self._run(self.state_, Z, pose_valid)
        return np.array([s.x_hat for s in states]).reshape(-1, 6)

    def fit_transform(self, Z, pose_valid=None):
        return self.fit(Z, pose_valid).x_hat_
