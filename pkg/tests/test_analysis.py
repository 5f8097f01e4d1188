import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyapredesign.analysis import (
    ScaledSystem,
    bound_report,
    epsilon_for_radius,
    inverse_time_scaling,
    prescribed_radius,
    prop1_bounds,
    prop2_reach_time,
    scaled_consistency_check,
    sigma1,
    time_scaling,
)
from lyapredesign.controller import ControllerParams
from lyapredesign.errors import InsufficientSamples, InvalidTarget
from lyapredesign.plant import chain_plant
from lyapredesign.riccati import solve_chain_are
from lyapredesign.sim import SimConfig, Trace, simulate

SQRT3 = math.sqrt(3.0)
P2 = np.array([[SQRT3, 1.0], [1.0, SQRT3]])
SOL2 = solve_chain_are(2, 1.0)


def test_prop1_examples():
    mu, written, standard = prop1_bounds(1.0, 0.5, P2, np.eye(2))
    assert mu == pytest.approx(2 * (SQRT3 + 1) / 0.5) and mu == pytest.approx(10.928, abs=1e-3)
    ratio = (SQRT3 + 1) / (SQRT3 - 1)
    assert written == pytest.approx(mu / math.sqrt(ratio))
    assert standard == pytest.approx(mu * math.sqrt(ratio))
    mu_lim, _, _ = prop1_bounds(3.0, 1 - 1e-12, P2, np.eye(2))
    assert mu_lim == pytest.approx(2 * 3.0 * (SQRT3 + 1), rel=1e-9)
    mu, w, s = prop1_bounds(2.0, 0.3, 4 * np.eye(2), np.eye(2))
    assert w == s == mu


@settings(max_examples=50)
@given(M=st.floats(0.0, 100.0), theta=st.floats(0.01, 0.99), a=st.floats(0.1, 10), b=st.floats(0.1, 10))
def test_standard_bound_dominates(M, theta, a, b):
    P = np.diag([a, b])
    _, w, s = prop1_bounds(M, theta, P, np.eye(2))
    assert s >= w - 1e-12 * max(1.0, s)


def test_prop2_examples():
    T = prop2_reach_time(5.0, 0.5, P2, np.eye(2))
    # inner ratio (sqrt3+1)/(sqrt3-1) = 2 + sqrt3
    assert T == pytest.approx(2 * (SQRT3 + 1) * math.log(math.sqrt(2 + SQRT3) * 10))
    assert T == pytest.approx(16.18, abs=5e-3)
    assert prop2_reach_time(1.0, 1.0 - 1e-15, np.eye(2), np.eye(2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidTarget):
        prop2_reach_time(5.0, 5.0, P2, np.eye(2))


@settings(max_examples=50)
@given(x0=st.floats(1.0, 100.0), m1=st.floats(0.01, 0.98), m2=st.floats(0.01, 0.98))
def test_prop2_monotone(x0, m1, m2):
    lo, hi = sorted((m1, m2))
    assert prop2_reach_time(x0, lo * x0, P2, np.eye(2)) >= prop2_reach_time(x0, hi * x0, P2, np.eye(2))
    assert prop2_reach_time(2 * x0, lo * x0, P2, np.eye(2)) > prop2_reach_time(x0, lo * x0, P2, np.eye(2))


def test_sigma1_examples():
    assert sigma1(1.0, 0.0, 2.0) == pytest.approx(1.0)
    assert sigma1(0.0, 0.3, 2.0) == 0.0
    assert sigma1(3.0, 0.5, 7.0) == pytest.approx(6.0)


@settings(max_examples=80)
@given(M=st.floats(0.0, 1e3), e=st.floats(0.0, 0.95), eps=st.floats(1e-6, 1e3))
def test_sigma1_properties(M, e, eps):
    s = sigma1(M, e, eps)
    assert 0.0 <= s < eps
    assert sigma1(M + 1.0, e, eps) >= s
    assert sigma1(M, min(e + 0.04, 0.99), eps) >= s


def test_radius():
    assert prescribed_radius(1.0, P2) == pytest.approx(1.1688, abs=1e-4)
    assert prescribed_radius(SQRT3 - 1, P2) == pytest.approx(1.0)
    for eps in (1e-4, 0.3, 7.0):
        assert epsilon_for_radius(prescribed_radius(eps, P2), P2) == pytest.approx(eps)


def test_time_scaling():
    assert time_scaling(0.0, 0.1, 2.0) == 0.0
    t1 = 2.0 * (1 - math.exp(-0.1))
    assert time_scaling(t1, 0.1, 2.0) == pytest.approx(1.0)
    assert abs(0.5 - inverse_time_scaling(time_scaling(0.5, 0.1, 2.0), 0.1, 2.0)) <= 1e-12
    with pytest.raises(ValueError):
        time_scaling(2.0, 0.1, 2.0)


@settings(max_examples=50)
@given(frac=st.floats(0.0, 0.999), alpha=st.floats(0.001, 1.0), T=st.floats(0.1, 10.0))
def test_time_scaling_round_trip(frac, alpha, T):
    t = frac * T
    assert inverse_time_scaling(time_scaling(t, alpha, T), alpha, T) == pytest.approx(t, abs=1e-12 * T)


def test_scaled_matrix():
    s = ScaledSystem(3, 0.0, 1.0)
    assert np.array_equal(s.A_matrix, np.eye(3, k=1))
    s = ScaledSystem(3, 0.2, 1.0)
    assert np.allclose(np.diag(s.A_matrix), [0.0, -0.2, -0.4])


def _run(dt, f=None):
    plant = chain_plant(2) if f is None else chain_plant(2, f=f)
    params = ControllerParams(1.0, 0.15, 2.0, 1e-3, SOL2)
    return simulate(plant, params, [2.0, 0.0], SimConfig(dt, 1.5)), params, plant


def test_scaled_consistency_nominal():
    tr, params, plant = _run(1e-3)
    rep = scaled_consistency_check(tr, params, plant)
    assert rep.max_residual <= 0.05 * rep.max_abs_y


def test_scaled_consistency_zero_trajectory():
    tr, params, plant = _run(1e-3)
    zero = replace(tr, x=np.zeros_like(tr.x), u=np.zeros_like(tr.u), barrier=np.zeros(len(tr), bool))
    assert scaled_consistency_check(zero, params, plant).max_residual == 0.0


def test_scaled_consistency_detects_corruption():
    tr, params, plant = _run(1e-3)
    bad = replace(tr, u=np.zeros_like(tr.u))
    assert not scaled_consistency_check(bad, params, plant).passes()


def test_scaled_consistency_first_order():
    r1 = scaled_consistency_check(*_run(1e-3)).max_residual
    r2 = scaled_consistency_check(*_run(5e-4)).max_residual
    assert r1 / r2 >= 1.5


def test_scaled_consistency_needs_rows():
    tr, params, plant = _run(1e-3)
    short = Trace(tr.t[:2], tr.x[:2], tr.u[:2], tr.V[:2], tr.Lambda[:2], tr.kappa[:2],
                  tr.Gamma[:2], tr.barrier[:2])
    with pytest.raises(InsufficientSamples):
        scaled_consistency_check(short, params, plant)


def test_bound_report():
    rep = bound_report(SOL2, 0.0, 0.0, 1.0)
    assert rep.sigma1 == 0.0 and rep.mu == 0.0
    assert rep.alpha_max == pytest.approx(0.18301, abs=1e-5)
    rep1 = bound_report(solve_chain_are(1, 1.0), 1.0, 0.0, 1.0)
    assert rep1.alpha_max is None and "not applicable" in rep1.format()
