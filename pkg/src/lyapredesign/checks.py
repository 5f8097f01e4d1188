"""Invariant checks on a finished (possibly reloaded) trace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import scaled_consistency_check
from .controller import ControllerParams
from .errors import InsufficientSamples
from .plant import PlantModel, sign
from .sim import Trace

SCALED_REL_TOL = 0.05


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False

    def line(self):
        tag = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        return f"[{tag}] {self.name}" + (f": {self.detail}" if self.detail else "")


def _result(name, ok, detail=""):
    return CheckResult(name, bool(ok), detail)


def structural_checks(trace: Trace, epsilon=None):
    out = []
    dt = np.diff(trace.t)
    uniform = dt.size == 0 or (np.all(dt > 0) and np.ptp(dt) <= 1e-9 * max(1.0, dt.max()))
    out.append(_result("time_grid", uniform, "strictly increasing, uniform stride"))

    b = trace.barrier
    first = int(np.argmax(b)) if b.any() else None
    suffix = first is None or bool(np.all(b[first:]))
    out.append(_result("mode_order", suffix, "reaching rows precede barrier rows"))

    reach = ~b
    g = trace.Gamma[reach]
    out.append(_result("gamma_monotone", np.all(np.diff(g) >= 0.0),
                       "Gamma nondecreasing while reaching"))
    out.append(_result("lambda_finite", np.all(np.isfinite(trace.Lambda)), "Lambda finite"))

    if epsilon is not None:
        if first is not None:
            ok = trace.V[first] <= 0.5 * epsilon and (first == 0 or trace.V[first - 1] > 0.5 * epsilon)
            out.append(_result("switch_event", ok, f"first barrier row at t={trace.t[first]:.6g}"))
            if trace.T1 is not None:
                out.append(_result("T1_recorded", trace.T1 <= trace.t[first] + 1e-12,
                                   f"T1={trace.T1}"))
        post = trace.V[b]
        worst = float(post.max() / epsilon) if post.size else 0.0
        out.append(_result("barrier", np.all(post < epsilon), f"max V/epsilon after T1 = {worst:.6g}"))
    return out


def model_checks(trace: Trace, params: ControllerParams, plant: PlantModel):
    out = []
    n = params.n
    # kappa column
    k_exp = np.ones_like(trace.t)
    r = ~trace.barrier
    k_exp[r] = 1.0 / (params.alpha * (params.T - trace.t[r]))
    out.append(_result("kappa", np.allclose(trace.kappa, k_exp, rtol=1e-12, atol=0.0),
                       "kappa = 1/(alpha(T-t)) while reaching, 1 after"))
    # u consistency
    worst = 0.0
    for t, x, u, lam, kap in zip(trace.t, trace.x, trace.u, trace.Lambda, trace.kappa):
        m = params.gamma_tilde * float(params.P.last_row @ (x * kap ** -np.arange(n, dtype=float)))
        u_rec = -(kap ** n * m + lam * sign(m)) / plant.b(t)
        worst = max(worst, abs(u - u_rec) / (1.0 + abs(u)))
    out.append(_result("control_law", worst <= 1e-9, f"max relative mismatch {worst:.3g}"))
    V_rec = np.einsum("ki,ij,kj->k", trace.x, params.P.P, trace.x)
    out.append(_result("lyapunov", np.allclose(trace.V, V_rec, rtol=1e-10, atol=1e-14),
                       "V = x^T P x"))
    try:
        rep = scaled_consistency_check(trace, params, plant)
        out.append(_result("scaled_consistency", rep.relative_residual <= SCALED_REL_TOL,
                           f"relative residual {rep.relative_residual:.3g} over {rep.samples} rows"))
    except InsufficientSamples as exc:
        out.append(CheckResult("scaled_consistency", True, str(exc), skipped=True))
    return out


def check_trace(trace: Trace, params: ControllerParams = None, plant: PlantModel = None):
    eps = params.epsilon if params is not None else (trace.metadata.get("params") or {}).get("epsilon")
    out = structural_checks(trace, eps)
    if params is not None and plant is not None:
        out += model_checks(trace, params, plant)
    return out
