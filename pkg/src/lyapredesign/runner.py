"""Execute configured runs and sweeps and write their artifacts."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .analysis import bound_report
from .config import BuiltRun, RunConfig, build_run, expand_sweep
from .errors import ControllerInvariantError, Divergence, NumericalError
from .sim import Trace, _plain, simulate, write_trace

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass
class RunResult:
    config: RunConfig
    trace: Optional[Trace]
    status: str  # "ok" or the error class name
    message: str = ""
    exit_code: int = EXIT_OK
    report: Optional[dict] = None


def final_half_max(trace: Trace, t_end: float, column="Lambda") -> Optional[float]:
    sel = trace.t >= 0.5 * t_end
    vals = getattr(trace, column)[sel]
    return float(vals.max()) if vals.size else None


def scenario_metrics(built: BuiltRun, trace: Trace) -> dict:
    """Physical-coordinate summaries for the application scenarios."""
    model, out = built.scenario_model, {}
    post = trace.barrier
    if built.config.scenario == "furuta" and len(trace):
        z = np.array([model.to_physical(x) for x in trace.x])
        Vm = np.array([model.voltage(x, u) for x, u in zip(trace.x, trace.u)])
        late = trace.t >= 0.6 * trace.t[-1]
        out["max_abs_theta_p_late"] = float(np.abs(z[late, 1]).max())
        out["max_abs_Vm_after_T1"] = float(np.abs(Vm[post]).max()) if post.any() else None
        out["saturation_active_after_T1"] = (
            bool(np.any(np.abs(Vm[post]) >= built.config.furuta.params.u_sat)) if post.any() else None)
    if built.config.scenario == "torsional" and post.any():
        out["max_abs_tracking_error_after_T1"] = float(np.abs(trace.x[post, 0]).max())
    return out


def make_report(built: BuiltRun, trace: Optional[Trace]) -> dict:
    cfg, sol = built.config, built.params.P
    pert = built.plant.perturbation
    x0n = float(np.linalg.norm(built.x0))
    mu_star = cfg.analysis.mu_star if cfg.analysis.mu_star is not None and cfg.analysis.mu_star < x0n else None
    rep = {
        "name": cfg.name,
        "alpha": built.params.alpha,
        "alpha_max": built.params.alpha_max,
        "alpha_bound_satisfied": built.params.satisfies_alpha_bound(),
        "are_residual": sol.residual_norm,
        "lambda_min_P": sol.lambda_min_P,
        "lambda_max_P": sol.lambda_max_P,
        "V0": float(built.x0 @ sol.P @ built.x0),
        "bounds": bound_report(sol, pert.M, pert.eps_b, built.params.epsilon,
                               cfg.analysis.theta, x0n, mu_star).to_dict(),
    }
    if trace is not None:
        rep.update(trace.summary())
        rep["max_Lambda_final_half"] = final_half_max(trace, cfg.sim.t_end)
        rep.update(scenario_metrics(built, trace))
    return rep


def execute(cfg: RunConfig) -> RunResult:
    """Build and simulate one config; controller and divergence errors keep the trace prefix.

    Config and ARE errors propagate to the caller.
    """
    built = build_run(cfg)
    meta = {"name": cfg.name, "scenario": cfg.scenario, "config": cfg.to_dict()}
    try:
        trace = simulate(built.plant, built.params, built.x0, cfg.sim,
                         Gamma0=cfg.controller.Gamma0, metadata=meta)
        return RunResult(cfg, trace, "ok", "", EXIT_OK, make_report(built, trace))
    except (ControllerInvariantError, Divergence) as err:
        code = EXIT_INVARIANT if isinstance(err, ControllerInvariantError) else EXIT_NUMERICAL
        rep = make_report(built, err.trace)
        rep["error"] = f"{type(err).__name__}: {err}"
        rep["error_time"] = err.t
        return RunResult(cfg, err.trace, type(err).__name__, str(err), code, rep)


def output_paths(cfg: RunConfig, directory=None):
    d = Path(directory or cfg.output.directory)
    trace = d / (cfg.output.trace or f"{cfg.name}.csv")
    report = d / (cfg.output.report or f"{cfg.name}.report.yaml")
    return trace, report


def write_result(res: RunResult, directory=None):
    trace_path, report_path = output_paths(res.config, directory)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    if res.trace is not None:
        write_trace(res.trace, trace_path)
    with report_path.open("w") as fh:
        rep = {"status": res.status, "exit_code": res.exit_code, **(res.report or {})}
        yaml.safe_dump(_plain(rep), fh, sort_keys=False)
    return trace_path, report_path


def _execute_safe(item):
    label, cfg = item
    try:
        return label, execute(cfg)
    except NumericalError as err:
        return label, RunResult(cfg, None, type(err).__name__, str(err), EXIT_NUMERICAL)


SWEEP_COLUMNS = ("label", "epsilon", "T", "status", "T1", "sup_V_after_T1",
                 "max_Lambda", "max_Lambda_final_half")


def run_sweep(cfg: RunConfig, directory=None, workers=None):
    """Run every sweep point in parallel; this process alone writes files."""
    items = expand_sweep(cfg)
    workers = workers or cfg.sweep.workers or min(len(items), os.cpu_count() or 1)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_safe, items))
    else:
        results = [_execute_safe(it) for it in items]

    out_dir = Path(directory or cfg.output.directory)
    rows = []
    for label, res in results:
        if res.report is not None or res.trace is not None:
            write_result(res, out_dir)
        rep = res.report or {}
        rows.append({
            "label": label, "epsilon": res.config.controller.epsilon, "T": res.config.controller.T,
            "status": res.status, "T1": rep.get("T1"), "sup_V_after_T1": rep.get("sup_V_after_T1"),
            "max_Lambda": rep.get("max_Lambda"), "max_Lambda_final_half": rep.get("max_Lambda_final_half"),
        })
    table = out_dir / f"{cfg.name}.sweep.csv"
    table.parent.mkdir(parents=True, exist_ok=True)
    with table.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return [r for _, r in results], rows, table
