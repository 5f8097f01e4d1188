"""Riccati design for the chain-of-integrators pair (J_n, e_n).

Solves

    J_n^T P + P J_n - gamma P e_n e_n^T P + Q = 0

by the stabilizing invariant subspace of the associated Hamiltonian matrix,
followed by Newton (Kleinman) refinement on the residual.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as la

from .errors import (
    ConfigError,
    NoStabilizingSolution,
    NonConvergence,
    NotSymmetric,
    UndefinedForFirstOrder,
)

GOLDEN_GAMMA = (1.0 + np.sqrt(5.0)) / 2.0
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class ChainStructure:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"chain order must be a positive integer, got {self.n!r}")

    @cached_property
    def J(self) -> np.ndarray:
        # J e_i = e_{i-1}: ones on the superdiagonal
        return np.eye(self.n, k=1)

    @cached_property
    def e_n(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[-1] = 1.0
        return e


def _symmetric(M, name="matrix", tol=1e-10):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, np.abs(M).max())
    if np.abs(M - M.T).max() > tol * scale:
        raise NotSymmetric(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class AreProblem:
    structure: ChainStructure
    gamma: float
    Q: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0.0 < self.gamma <= GOLDEN_GAMMA + 1e-15):
            raise ConfigError(
                f"gamma must lie in (0, (1+sqrt 5)/2], got {self.gamma}")
        Q = _symmetric(self.Q, "Q")
        if Q.shape != (self.structure.n, self.structure.n):
            raise ConfigError(f"Q must be {self.structure.n}x{self.structure.n}")
        if np.linalg.eigvalsh(Q).min() <= 0.0:
            raise ConfigError("Q must be positive definite")
        object.__setattr__(self, "Q", Q)

    @classmethod
    def identity(cls, n, gamma):
        return cls(ChainStructure(n), gamma, np.eye(n))


@dataclass(frozen=True)
class AreSolution:
    P: np.ndarray = field(repr=False)
    residual_norm: float
    lambda_min_P: float
    lambda_max_P: float
    problem: AreProblem = field(repr=False)

    @property
    def n(self):
        return self.problem.structure.n

    @property
    def gamma(self):
        return self.problem.gamma

    @property
    def Q(self):
        return self.problem.Q

    @property
    def last_row(self) -> np.ndarray:
        """e_n^T P."""
        return self.P[-1]


def are_residual(P, problem: AreProblem) -> np.ndarray:
    J = problem.structure.J
    p_n = P[:, -1]
    return J.T @ P + P @ J - problem.gamma * np.outer(p_n, p_n) + problem.Q


def _hamiltonian(problem: AreProblem) -> np.ndarray:
    J = problem.structure.J
    e = problem.structure.e_n
    return np.block([[J, -problem.gamma * np.outer(e, e)],
                     [-problem.Q, -J.T]])


def _newton_step(P, problem):
    J = problem.structure.J
    e = problem.structure.e_n
    Acl = J - problem.gamma * np.outer(e, P[-1])
    p_n = P[:, -1]
    rhs = -(problem.Q + problem.gamma * np.outer(p_n, p_n))
    X = la.solve_continuous_lyapunov(Acl.T, rhs)
    return 0.5 * (X + X.T)


def solve_are(problem: AreProblem, tol: float = DEFAULT_TOL,
              max_newton: int = 8) -> AreSolution:
    """Stabilizing solution P of the chain ARE.

    One Newton step is always taken after the subspace construction; more are
    taken only while the Frobenius residual exceeds ``tol``.
    """
    n = problem.structure.n
    H = _hamiltonian(problem)
    eig = la.eigvals(H)
    if np.abs(eig.real).min() <= 1e-10 * max(1.0, np.abs(H).max()):
        raise NoStabilizingSolution(
            "Hamiltonian has eigenvalues on the imaginary axis "
            f"(n={n}, gamma={problem.gamma})")

    T, Z, sdim = la.schur(H, output="real", sort="lhp")
    if sdim != n:
        raise NoStabilizingSolution(f"stable subspace has dimension {sdim}, expected {n}")
    U1, U2 = Z[:n, :n], Z[n:, :n]
    if np.linalg.cond(U1) > 1e12:
        raise NoStabilizingSolution("stable subspace is not a graph over the state space")
    P = np.linalg.solve(U1.T, U2.T).T
    P = 0.5 * (P + P.T)

    res = np.linalg.norm(are_residual(P, problem))
    for _ in range(max_newton):
        P_next = _newton_step(P, problem)
        res_next = np.linalg.norm(are_residual(P_next, problem))
        if not np.isfinite(res_next):
            break
        P, res = P_next, res_next
        if res <= tol:
            break

    if res > tol:
        raise NonConvergence(f"ARE residual {res:.3e} above tol {tol:.1e}")
    ev = np.linalg.eigvalsh(P)
    if ev[0] <= 0.0:
        raise NoStabilizingSolution(f"solution is not positive definite (lambda_min={ev[0]:.3e})")
    return AreSolution(P=P, residual_norm=float(res), lambda_min_P=float(ev[0]),
                       lambda_max_P=float(ev[-1]), problem=problem)


def solve_chain_are(n, gamma, Q=None, tol=DEFAULT_TOL) -> AreSolution:
    Q = np.eye(n) if Q is None else np.asarray(Q, dtype=float)
    return solve_are(AreProblem(ChainStructure(n), gamma, Q), tol=tol)


def spectral_bounds(M, tol=1e-10):
    """(lambda_min, lambda_max) of a symmetric matrix."""
    ev = np.linalg.eigvalsh(_symmetric(M, tol=tol))
    return float(ev[0]), float(ev[-1])


def alpha_bound(P, Q, n):
    """Largest admissible PNF decay parameter: lambda_min(Q) / (2 (n-1) lambda_max(P)).

    Any alpha strictly below the returned value is admissible.
    """
    if n < 2:
        raise UndefinedForFirstOrder("alpha bound needs n >= 2 (denominator contains n-1)")
    P_mat = P.P if isinstance(P, AreSolution) else P
    lam_min_q, _ = spectral_bounds(Q)
    _, lam_max_p = spectral_bounds(P_mat)
    return lam_min_q / (2.0 * (n - 1) * lam_max_p)
