"""Feature-level selection between the two ambiguous pose candidates.

Each candidate is scored by its reprojection error (pixels^2) plus the
squared distance, in the vehicle frame, between the marker corners mapped by
the candidate and by the filter's predicted pose (metres^2).  The two terms
are summed as-is; ``e2_weight`` scales the object-space term for studies.
"""

from dataclasses import dataclass
import math

import numpy as np

from .camera import reprojection_error
from .exceptions import BothInvalid
from .se3 import PlanarState, from_planar, transform_point

TIE_TOL = 1e-12


@dataclass(frozen=True)
class CostBreakdown:
    e1: float
    e2: float
    e: float
    candidate_id: str


def prior_pose(a_priori):
    """World-to-vehicle transform of the predicted planar pose (z, roll, pitch = 0)."""
    x, y, psi = a_priori.x_hat[:3]
    return from_planar(PlanarState(x, y, psi))


def object_space_error(candidate, prior, marker):
    diff = transform_point(candidate, marker.corners_world) - transform_point(
        prior, marker.corners_world
    )
    return float(np.sum(diff * diff))


def total_cost(candidate, prior, rig, marker, obs, candidate_id="a", e2_weight=1.0, e1=None):
    """Cost breakdown for one candidate; ``e1`` may be passed if already known."""
    if e1 is None:
        e1 = reprojection_error(rig, candidate, marker, obs)
    e2 = object_space_error(candidate, prior, marker)
    e = math.inf if not math.isfinite(e1) else e1 + e2_weight * e2
    return CostBreakdown(float(e1), e2, e, candidate_id)


def choose(cost_a, cost_b):
    """'a' or 'b' by smaller total cost; near-ties go to the smaller e1, then 'a'."""
    if not (math.isfinite(cost_a.e) or math.isfinite(cost_b.e)):
        raise BothInvalid("both candidates have infinite cost")
    if math.isfinite(cost_a.e) and math.isfinite(cost_b.e) and abs(cost_a.e - cost_b.e) <= TIE_TOL:
        return "b" if cost_b.e1 < cost_a.e1 else "a"
    return "b" if cost_b.e < cost_a.e else "a"


def select(pair, prior, rig, marker, obs, e2_weight=1.0):
    """Pick the candidate with the smaller feature-level cost.

    Returns ``(pose, (cost_a, cost_b))``.
    """
    cost_a = total_cost(pair.pose_a, prior, rig, marker, obs, "a", e2_weight, pair.e1_a)
    cost_b = total_cost(pair.pose_b, prior, rig, marker, obs, "b", e2_weight, pair.e1_b)
    winner = choose(cost_a, cost_b)
    return (pair.pose_a if winner == "a" else pair.pose_b), (cost_a, cost_b)


def select_min_reprojection(pair):
    """Baseline rule: the candidate with the lower reprojection error wins."""
    if not (math.isfinite(pair.e1_a) or math.isfinite(pair.e1_b)):
        raise BothInvalid("both candidates have infinite reprojection error")
    return pair.pose_b if pair.e1_b < pair.e1_a else pair.pose_a
