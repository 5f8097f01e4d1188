import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings
from hypothesis import strategies as st

from lyapredesign.errors import ConfigError, NotSymmetric, UndefinedForFirstOrder
from lyapredesign.riccati import (
    GOLDEN_GAMMA,
    AreProblem,
    ChainStructure,
    alpha_bound,
    are_residual,
    solve_are,
    solve_chain_are,
    spectral_bounds,
)

SQRT3 = math.sqrt(3.0)
P2 = np.array([[SQRT3, 1.0], [1.0, SQRT3]])


def scipy_oracle(n, gamma, Q):
    """Independent solution through scipy's CARE with R = 1/gamma."""
    s = ChainStructure(n)
    return la.solve_continuous_are(s.J, s.e_n[:, None], Q, np.array([[1.0 / gamma]]))


def test_chain_structure():
    s = ChainStructure(4)
    assert np.array_equal(s.J @ np.eye(4)[:, 2], np.eye(4)[:, 1])
    assert np.allclose(np.linalg.matrix_power(s.J, 4), 0.0)
    assert s.e_n.tolist() == [0, 0, 0, 1]
    with pytest.raises(ConfigError):
        ChainStructure(0)


def test_scalar_case():
    sol = solve_chain_are(1, 1.0)
    assert sol.P[0, 0] == pytest.approx(1.0, abs=1e-12)
    sol = solve_chain_are(1, 0.25, Q=[[4.0]])
    assert sol.P[0, 0] == pytest.approx(4.0, abs=1e-10)


def test_double_integrator_closed_form():
    sol = solve_chain_are(2, 1.0)
    assert np.allclose(sol.P, P2, atol=1e-12)
    # hand equations: -g p12^2 + 1 = 0, p11 - g p12 p22 = 0, 2 p12 - g p22^2 + 1 = 0
    p11, p12, p22 = sol.P[0, 0], sol.P[0, 1], sol.P[1, 1]
    assert abs(-p12 ** 2 + 1) < 1e-12
    assert abs(p11 - p12 * p22) < 1e-12
    assert abs(2 * p12 - p22 ** 2 + 1) < 1e-12


def test_small_gamma_residual():
    sol = solve_chain_are(2, 0.1)
    r = np.linalg.norm(are_residual(sol.P, sol.problem))
    assert r <= 1e-9
    assert np.linalg.eigvalsh(sol.P).min() > 0


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("gamma", [0.1, 0.45, 1.0, GOLDEN_GAMMA])
def test_matches_scipy(n, gamma):
    sol = solve_chain_are(n, gamma)
    ref = scipy_oracle(n, gamma, np.eye(n))
    assert np.allclose(sol.P, ref, rtol=1e-8, atol=1e-9)
    assert np.array_equal(sol.P, sol.P.T)
    np.linalg.cholesky(sol.P)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), gamma=st.floats(0.05, float(GOLDEN_GAMMA)),
       q=st.lists(st.floats(0.1, 10.0), min_size=5, max_size=5))
def test_residual_property(n, gamma, q):
    Q = np.diag(q[:n])
    sol = solve_are(AreProblem(ChainStructure(n), gamma, Q))
    assert sol.residual_norm <= 1e-10
    assert np.linalg.norm(are_residual(sol.P, sol.problem)) <= 1e-10
    assert sol.lambda_min_P > 0
    # stabilizing: J - gamma e_n e_n^T P is Hurwitz
    s = ChainStructure(n)
    assert np.linalg.eigvals(s.J - gamma * np.outer(s.e_n, sol.P[-1])).real.max() < 0


def test_gamma_validation():
    with pytest.raises(ConfigError):
        AreProblem.identity(2, 0.0)
    with pytest.raises(ConfigError):
        AreProblem.identity(2, 1.7)
    with pytest.raises(ConfigError):
        AreProblem(ChainStructure(2), 1.0, -np.eye(2))
    with pytest.raises(NotSymmetric):
        AreProblem(ChainStructure(2), 1.0, np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_feasibility_monotone_in_gamma():
    gammas = np.linspace(0.05, GOLDEN_GAMMA, 12)
    for n in (2, 4):
        ok = []
        for g in gammas:
            try:
                solve_chain_are(n, g)
                ok.append(True)
            except Exception:
                ok.append(False)
        # once it succeeds it succeeds at every smaller gamma
        first_fail = ok.index(False) if False in ok else len(ok)
        assert all(ok[:first_fail]) and not any(ok[first_fail:])


def test_spectral_bounds():
    assert spectral_bounds(np.eye(2)) == pytest.approx((1.0, 1.0))
    assert spectral_bounds(np.diag([2.0, 5.0])) == pytest.approx((2.0, 5.0))
    assert spectral_bounds(P2) == pytest.approx((SQRT3 - 1, SQRT3 + 1))
    with pytest.raises(NotSymmetric):
        spectral_bounds(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_alpha_bound():
    assert alpha_bound(P2, np.eye(2), 2) == pytest.approx(1 / (2 * (SQRT3 + 1)), rel=1e-12)
    assert alpha_bound(P2, 2 * np.eye(2), 2) == pytest.approx(0.36603, abs=1e-5)
    sol = solve_chain_are(2, 1.0)
    assert alpha_bound(sol, sol.Q, 2) == pytest.approx(0.18301, abs=1e-5)
    with pytest.raises(UndefinedForFirstOrder):
        alpha_bound(np.eye(1), np.eye(1), 1)


def test_identity_weight_maximizes_ratio():
    def ratio(Q):
        sol = solve_are(AreProblem(ChainStructure(2), 1.0, Q))
        return np.linalg.eigvalsh(Q).min() / sol.lambda_max_P

    base = ratio(np.eye(2))
    for Q in (np.diag([1.0, 2.0]), np.diag([2.0, 1.0])):
        # compare at equal scale: normalize by lambda_min(Q)
        Qn = Q / np.linalg.eigvalsh(Q).min()
        assert ratio(Qn) <= base + 1e-12
    assert ratio(2 * np.eye(2)) > 0
