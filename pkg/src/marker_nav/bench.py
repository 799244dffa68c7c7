"""Static Monte-Carlo benchmark of candidate selection (no vehicle motion).

Each trial places the vehicle so that the front camera views the marker from
``range_m`` at a bearing of up to ``tilt_deg`` off the marker normal, draws a
noisy observation and a noisy planar prior, and scores both selection rules
against the truth.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .disambiguation import choose, object_space_error, total_cost
from .exceptions import BothInvalid, ConfigError, DegenerateConfiguration, NoValidPose
from .planar_pose import LMOptions, candidates_vehicle_world
from .se3 import PlanarState, from_planar, invert
from .simulator import SimConfig, synthesize_observation

BENCH_COLUMNS = (
    "trial", "x", "y", "psi", "bearing", "e1_a", "e1_b", "e2_a", "e2_b", "e_a", "e_b",
    "nearer", "e1_only", "ours", "e1_only_correct", "ours_correct",
)

_MAX_REDRAWS = 100
# candidates whose object-space distances to truth differ by less than this
# (m^2) are the same pose, so either choice is correct
SAME_POSE_TOL = 1e-10


@dataclass(frozen=True)
class BenchResult:
    trials: int
    e1_only_accuracy: float
    ours_accuracy: float
    ambiguous_fraction: float
    rows: list = field(default_factory=list, repr=False)


def _check_envelope(sigma, range_m, tilt_deg, trials, prior_noise):
    if not (isinstance(trials, int) and trials >= 1):
        raise ConfigError("trials", f"must be a positive integer, got {trials!r}")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ConfigError("sigma", f"must be >= 0, got {sigma!r}")
    if not (math.isfinite(range_m) and range_m > 0):
        raise ConfigError("range", f"must be > 0, got {range_m!r}")
    if not (math.isfinite(tilt_deg) and 0 <= tilt_deg < 90):
        raise ConfigError("tilt", f"must be in [0, 90) degrees, got {tilt_deg!r}")
    if len(prior_noise) != 2 or not all(math.isfinite(v) and v >= 0 for v in prior_noise):
        raise ConfigError("prior-noise", f"expected two values >= 0, got {prior_noise!r}")


def _vehicle_pose(marker, range_m, bearing, aim, mount):
    """Planar pose with camera 1 ``range_m`` from the marker centre.

    ``mount`` is the camera centre in the vehicle frame (x, y).
    """
    n = marker.normal[:2] / np.linalg.norm(marker.normal[:2])
    out = -n  # horizontal direction from the marker face toward the viewer
    c, s = math.cos(bearing), math.sin(bearing)
    d = np.array([c * out[0] - s * out[1], s * out[0] + c * out[1]])
    cam = marker.center[:2] + range_m * d
    psi = math.atan2(-d[1], -d[0]) + aim
    x = cam[0] - (math.cos(psi) * mount[0] - math.sin(psi) * mount[1])
    y = cam[1] - (math.sin(psi) * mount[0] + math.cos(psi) * mount[1])
    return PlanarState(x, y, psi)


def run_bench(sigma=1.0, range_m=2.5, tilt_deg=15.0, trials=1000, prior_noise=(0.05, math.radians(3.0)),
              seed=0, e2_weight=None, config=None, max_aim_deg=10.0):
    """Run the benchmark; ``prior_noise`` is (metres, radians) standard deviation."""
    _check_envelope(sigma, range_m, tilt_deg, trials, prior_noise)
    cfg = config or SimConfig()
    weight = cfg.e2_weight if e2_weight is None else e2_weight
    mount = invert(cfg.rig.extrinsic(1)).translation[:2]
    rng = np.random.default_rng(seed)
    opts = LMOptions()
    tilt = math.radians(tilt_deg)
    aim_max = math.radians(max_aim_deg)
    rows = []
    for trial in range(trials):
        for _ in range(_MAX_REDRAWS):
            bearing = rng.uniform(-tilt, tilt)
            aim = rng.uniform(-aim_max, aim_max)
            truth = _vehicle_pose(cfg.marker, range_m, bearing, aim, mount)
            obs = synthesize_observation(truth, cfg.rig, cfg.marker, sigma, rng)
            if obs is not None:
                break
        else:
            raise ConfigError("range", f"marker not fully visible at range {range_m} m")
        dp = rng.normal(0.0, 1.0, size=3)
        prior = from_planar(PlanarState(
            truth.x + prior_noise[0] * dp[0], truth.y + prior_noise[0] * dp[1], truth.psi + prior_noise[1] * dp[2]
        ))
        try:
            pair = candidates_vehicle_world(cfg.rig, cfg.marker, obs, opts)
            ca = total_cost(pair.pose_a, prior, cfg.rig, cfg.marker, obs, "a", weight, pair.e1_a)
            cb = total_cost(pair.pose_b, prior, cfg.rig, cfg.marker, obs, "b", weight, pair.e1_b)
            ours = choose(ca, cb)
        except (BothInvalid, NoValidPose, DegenerateConfiguration):
            continue
        T_true = from_planar(truth)
        da = object_space_error(pair.pose_a, T_true, cfg.marker)
        db = object_space_error(pair.pose_b, T_true, cfg.marker)
        nearer = "b" if db < da else "a"
        dist = {"a": da, "b": db}
        best = min(da, db) + SAME_POSE_TOL
        e1_near, e1_far = (pair.e1_a, pair.e1_b) if nearer == "a" else (pair.e1_b, pair.e1_a)
        distinct = abs(da - db) > SAME_POSE_TOL
        rows.append({
            "trial": trial, "x": truth.x, "y": truth.y, "psi": truth.psi, "bearing": bearing,
            "e1_a": ca.e1, "e1_b": cb.e1, "e2_a": ca.e2, "e2_b": cb.e2, "e_a": ca.e, "e_b": cb.e,
            "nearer": nearer, "e1_only": "a", "ours": ours,
            "e1_only_correct": int(dist["a"] <= best), "ours_correct": int(dist[ours] <= best),
            "_ambiguous": distinct and e1_near > e1_far,
        })
    n = len(rows)
    if n == 0:
        raise ConfigError("range", "no trial produced a valid candidate pair")
    return BenchResult(
        trials=n,
        e1_only_accuracy=sum(r["e1_only_correct"] for r in rows) / n,
        ours_accuracy=sum(r["ours_correct"] for r in rows) / n,
        ambiguous_fraction=sum(r["_ambiguous"] for r in rows) / n,
        rows=[{k: r[k] for k in BENCH_COLUMNS} for r in rows],
    )
