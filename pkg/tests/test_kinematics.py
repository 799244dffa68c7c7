import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marker_nav.kinematics import (
    BicycleParams,
    body_to_world,
    integrate,
    sideslip,
    turning_radius,
    yaw_rate,
)
from marker_nav.se3 import PlanarState

P = BicycleParams()

# high-precision evaluations of the closed forms (30-digit arithmetic)
BETA_05 = 0.266646626937976322710600573463
R_03 = 0.837418662377438958528864435271
PSI_DOT_1_03 = 1.19414582565068611193049111224
BW_2_05_01 = (1.86706946544884099393325126037, 0.716973926435668332646372633404, 4.11715718239457780062210306659)


def test_sideslip_values():
    assert sideslip(0.0) == 0.0
    assert sideslip(0.5) == pytest.approx(BETA_05, abs=1e-12)
    assert sideslip(-0.5) == pytest.approx(-BETA_05, abs=1e-12)


def test_yaw_rate_values():
    assert yaw_rate(1.0, 0.0, P) == 0.0
    assert turning_radius(0.3, P) == pytest.approx(R_03, abs=1e-12)
    assert yaw_rate(1.0, 0.3, P) == pytest.approx(PSI_DOT_1_03, abs=1e-12)
    assert yaw_rate(-1.0, 0.3, P) == pytest.approx(-PSI_DOT_1_03, abs=1e-12)
    assert turning_radius(0.0, P) == math.inf


def test_body_to_world_values():
    v = body_to_world(1.0, 0.0, 0.0, P)
    assert (v.vx, v.vy, v.psi_dot) == (1.0, 0.0, 0.0)
    v = body_to_world(1.0, 0.0, math.pi / 2, P)
    assert v.vx == pytest.approx(0.0, abs=1e-15) and v.vy == pytest.approx(1.0) and v.psi_dot == 0.0
    v = body_to_world(2.0, 0.5, 0.1, P)
    assert (v.vx, v.vy, v.psi_dot) == pytest.approx(BW_2_05_01, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-0.5, 0.5), st.floats(-10, 10))
def test_speed_preserved_and_odd_in_steer(v, delta, psi):
    w = body_to_world(v, delta, psi, P)
    assert math.hypot(w.vx, w.vy) == pytest.approx(abs(v), abs=1e-12)
    assert sideslip(-delta) == -sideslip(delta)
    assert yaw_rate(v, -delta, P) == pytest.approx(-yaw_rate(v, delta, P), abs=1e-15)


def test_integrate_examples():
    s = PlanarState(1.0, 2.0, 0.3)
    assert integrate(s, 0.0, 0.4, 0.1, P) == s
    s2 = integrate(PlanarState(0, 0, 0), 1.0, 0.0, 0.1, P)
    assert (s2.x, s2.y, s2.psi) == pytest.approx((0.1, 0.0, 0.0))
    with pytest.raises(ValueError):
        integrate(s, 1.0, 0.0, 0.0, P)


def fit_circle(xy):
    """Algebraic least-squares circle fit; returns (centre, radius)."""
    A = np.column_stack([2 * xy, np.ones(len(xy))])
    b = np.sum(xy**2, axis=1)
    cx, cy, c = np.linalg.lstsq(A, b, rcond=None)[0]
    return np.array([cx, cy]), math.sqrt(c + cx**2 + cy**2)


def test_constant_steer_traces_expected_circle():
    s = PlanarState(0, 0, 0)
    pts = [(s.x, s.y)]
    for _ in range(1000):
        s = integrate(s, 1.0, 0.3, 0.001, P)
        pts.append((s.x, s.y))
    _, radius = fit_circle(np.array(pts))
    assert radius == pytest.approx(R_03, rel=0.01)


def test_params_validation():
    with pytest.raises(ValueError):
        BicycleParams(wheelbase_l=0.0)
    assert BicycleParams().lf == BicycleParams().lr == 0.128
