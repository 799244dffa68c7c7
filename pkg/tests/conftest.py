import math

import numpy as np
import pytest

from marker_nav.camera import MarkerModel, MarkerObservation, visible_projections
from marker_nav.se3 import RigidTransform, exp_so3, from_planar
from marker_nav.simulator import PAPER_MARKER_CORNERS

MARKER_SIDE = 0.172


def random_rotation(rng):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return exp_so3(axis * rng.uniform(0, math.pi))


def random_transform(rng, scale=2.0):
    return RigidTransform(random_rotation(rng), rng.uniform(-scale, scale, 3))


def tilted_view(rng, tilt, distance):
    """Camera-from-marker pose with the marker plane tilted by ``tilt`` about a
    random in-plane axis, centred near the optical axis at ``distance``."""
    phi = rng.uniform(0, 2 * math.pi)
    axis = np.array([math.cos(phi), math.sin(phi), 0.0])
    R = exp_so3(axis * tilt) @ exp_so3(np.array([0.0, 0.0, rng.uniform(-math.pi, math.pi)]))
    t = np.array([rng.uniform(-0.1, 0.1) * distance, rng.uniform(-0.1, 0.1) * distance, distance])
    return RigidTransform(R, t)


def noise_free_observation(rig, t_vw, marker):
    vis = visible_projections(rig, t_vw, marker)
    if not vis:
        return None
    return MarkerObservation({j: pix for j, (pix, _) in vis.items()})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def paper_marker():
    return MarkerModel(np.array(PAPER_MARKER_CORNERS))


@pytest.fixture
def square_marker():
    return MarkerModel.square(MARKER_SIDE)


def facing_state():
    """A planar pose from which camera 1 sees the paper marker head on."""
    from marker_nav.se3 import PlanarState

    return PlanarState(0.0, -1.0, math.pi / 2)


@pytest.fixture
def facing_pose():
    return from_planar(facing_state())
