"""Closed-form bounds and the scaled-time consistency oracle.

This module is the only consumer of the declared perturbation bounds
(M, eps_b); the controller never sees them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, InsufficientSamples, InvalidTarget
from .riccati import AreSolution, alpha_bound, spectral_bounds


def _extremes(P):
    if isinstance(P, AreSolution):
        return P.lambda_min_P, P.lambda_max_P
    return spectral_bounds(P)


@dataclass(frozen=True)
class BoundReport:
    mu: float
    ultimate_bound_as_written: float
    ultimate_bound_standard: float
    T_star_bar: Optional[float]
    sigma1: float
    R_eps: float
    alpha_max: Optional[float]
    epsilon: float
    theta: float
    mu_star: Optional[float]

    def to_dict(self):
        return asdict(self)

    def format(self) -> str:
        rows = [
            ("mu", self.mu),
            ("ultimate_bound_standard", self.ultimate_bound_standard),
            ("ultimate_bound_as_written", self.ultimate_bound_as_written),
            ("T_star_bar", self.T_star_bar),
            ("sigma1", self.sigma1),
            ("R_eps", self.R_eps),
            ("alpha_max", self.alpha_max),
        ]
        out = []
        for name, v in rows:
            out.append(f"{name}: {'not applicable' if v is None else repr(float(v))}")
        return "\n".join(out)


def prop1_bounds(M, theta, P, Q):
    """(mu, bound_as_written, bound_standard) for the nominal closed loop.

    mu = 2 M lambda_max(P) / (theta lambda_min(Q)); the standard ultimate bound
    scales mu by sqrt(lambda_max(P)/lambda_min(P)), the as-written one by the
    reciprocal ratio.
    """
    if not 0.0 < theta < 1.0:
        raise ConfigError("theta must lie in (0, 1)")
    if M < 0.0:
        raise ConfigError("M must be nonnegative")
    lo_p, hi_p = _extremes(P)
    lo_q, _ = spectral_bounds(Q)
    mu = 2.0 * M * hi_p / (theta * lo_q)
    return mu, math.sqrt(lo_p / hi_p) * mu, math.sqrt(hi_p / lo_p) * mu


def prop2_reach_time(x0_norm, mu_star, P, Q) -> float:
    """Upper bound on the time for the redesigned loop to reach ||x|| <= mu_star."""
    if not 0.0 < mu_star < x0_norm:
        raise InvalidTarget(f"need 0 < mu_star < ||x0||, got mu_star={mu_star}, ||x0||={x0_norm}")
    lo_p, hi_p = _extremes(P)
    lo_q, _ = spectral_bounds(Q)
    return (2.0 * hi_p / lo_q) * math.log(math.sqrt(hi_p / lo_p) * x0_norm / mu_star)


def sigma1(M, eps_b, epsilon) -> float:
    """Phi/(1+Phi) epsilon with Phi = M/(1-eps_b)."""
    if not 0.0 <= eps_b < 1.0:
        raise ConfigError("eps_b must lie in [0, 1)")
    if M < 0.0:
        raise ConfigError("M must be nonnegative")
    phi = M / (1.0 - eps_b)
    return phi / (1.0 + phi) * epsilon


def barrier_gain_bound(M, eps_b, epsilon) -> float:
    """sigma1/(epsilon - sigma1), which equals Phi."""
    s = sigma1(M, eps_b, epsilon)
    return s / (epsilon - s)


def prescribed_radius(epsilon, P) -> float:
    if not epsilon > 0.0:
        raise ConfigError("epsilon must be positive")
    lo, _ = _extremes(P)
    return math.sqrt(epsilon / lo)


def epsilon_for_radius(R_desired, P) -> float:
    """R^2 lambda_min(P); any epsilon strictly below it keeps V < epsilon inside ||x|| < R."""
    if not R_desired > 0.0:
        raise ConfigError("radius must be positive")
    lo, _ = _extremes(P)
    return R_desired ** 2 * lo


def time_scaling(t, alpha, T):
    """tau(t) = -(1/alpha) ln(1 - t/T), defined on [0, T)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t >= T):
        raise ValueError(f"time scaling is defined on [0, T={T}) only")
    out = -np.log1p(-t / T) / alpha
    return float(out) if out.ndim == 0 else out


def inverse_time_scaling(tau, alpha, T):
    tau = np.asarray(tau, dtype=float)
    out = -T * np.expm1(-alpha * tau)
    return float(out) if out.ndim == 0 else out


def bound_report(sol: AreSolution, M, eps_b, epsilon, theta=0.5, x0_norm=None, mu_star=None):
    mu, as_written, standard = prop1_bounds(M, theta, sol, sol.Q)
    T_bar = None
    if x0_norm is not None and mu_star is not None:
        T_bar = prop2_reach_time(x0_norm, mu_star, sol, sol.Q)
    return BoundReport(
        mu=mu, ultimate_bound_as_written=as_written, ultimate_bound_standard=standard,
        T_star_bar=T_bar, sigma1=sigma1(M, eps_b, epsilon),
        R_eps=prescribed_radius(epsilon, sol),
        alpha_max=alpha_bound(sol, sol.Q, sol.n) if sol.n >= 2 else None,
        epsilon=epsilon, theta=theta, mu_star=mu_star)


# ------------------------------------------------------------ scaled time

@dataclass(frozen=True)
class ScaledSystem:
    """Chain dynamics seen through y = Omega^{-1} x and tau = tau(t)."""

    n: int
    alpha: float
    T: float

    @property
    def D_alpha(self):
        return np.diag(-np.arange(self.n, dtype=float))

    @property
    def A_matrix(self):
        return np.eye(self.n, k=1) + self.alpha * self.D_alpha

    def kappa(self, tau):
        # kappa(t(tau)) = e^{alpha tau} / (alpha T)
        return np.exp(self.alpha * tau) / (self.alpha * self.T)

    def rhs(self, tau, y, w):
        """y' for last-channel input w = b(1+delta_b)u + f evaluated at t(tau)."""
        dy = self.A_matrix @ y
        dy[-1] += self.kappa(tau) ** (-self.n) * w
        return dy


@dataclass(frozen=True)
class ConsistencyReport:
    max_residual: float
    max_abs_y: float
    samples: int

    @property
    def relative_residual(self):
        return self.max_residual / self.max_abs_y if self.max_abs_y > 0 else self.max_residual

    def passes(self, rel_tol=0.05):
        return self.relative_residual <= rel_tol


def scaled_consistency_check(trace, params, plant) -> ConsistencyReport:
    """Finite-difference check of a reaching-phase trace against the scaled field.

    ``trace`` supplies t, x and u; only rows before T1 (and before T) are used.
    The last-channel input is rebuilt from ``plant`` (b, delta_b, f) so a trace
    whose u column is inconsistent with x shows up as a large residual.

    Interior rows use the centered quotient (y[k+1]-y[k-1])/(tau[k+1]-tau[k-1])
    against the tau-weighted mean of the field at k-1 and k; end rows use
    one-sided quotients against the field at the left node.  Pairing the
    stencil with the field this way keeps the residual O(dt) even where the
    field jumps (sign terms, switching perturbations).
    """
    t = np.asarray(trace.t, dtype=float)
    keep = ~np.asarray(trace.barrier, dtype=bool) & (t < params.T)
    t, x, u = t[keep], np.asarray(trace.x)[keep], np.asarray(trace.u)[keep]
    if t.size < 3:
        raise InsufficientSamples(f"need at least 3 reaching-phase rows, got {t.size}")
    sys_ = ScaledSystem(x.shape[1], params.alpha, params.T)
    tau = time_scaling(t, params.alpha, params.T)
    kap = sys_.kappa(tau)
    y = x * kap[:, None] ** -np.arange(sys_.n, dtype=float)
    p = plant.perturbation
    w = np.array([plant.b(tk) * (1.0 + p.delta_b(tk)) * plant.applied_input(tk, xk, uk) + p.f(tk)
                  for tk, xk, uk in zip(t, x, u)])
    F = np.array([sys_.rhs(tk, yk, wk) for tk, yk, wk in zip(tau, y, w)])
    h = np.diff(tau)[:, None]
    fwd = np.diff(y, axis=0) / h
    centered = (y[2:] - y[:-2]) / (h[1:] + h[:-1])
    mean_field = (h[:-1] * F[:-2] + h[1:] * F[1:-1]) / (h[1:] + h[:-1])
    res = max(np.abs(centered - mean_field).max(),
              np.abs(fwd[0] - F[0]).max(), np.abs(fwd[-1] - F[-2]).max())
    if not np.isfinite(res):
        res = math.inf
    return ConsistencyReport(float(res), float(np.abs(y).max()), int(t.size))
