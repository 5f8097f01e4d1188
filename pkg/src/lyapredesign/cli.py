"""Command-line front end.

    lyapredesign run <config>
    lyapredesign sweep <config>
    lyapredesign bounds <config>
    lyapredesign are --n N --gamma G [--q-diag q1 ... qN]
    lyapredesign check <trace.csv>

Exit codes: 0 ok, 1 config error, 2 controller invariant violated,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from .analysis import bound_report
from .checks import check_trace
from .config import build_run, load_config, parse_config
from .errors import ConfigError, NumericalError
from .riccati import AreProblem, ChainStructure, alpha_bound, solve_are
from .runner import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_NUMERICAL,
    EXIT_OK,
    execute,
    run_sweep,
    write_result,
)
from .sim import read_trace


def _fmt(v):
    return "n/a" if v is None else repr(float(v))


def cmd_run(args):
    cfg = load_config(args.config)
    res = execute(cfg)
    trace_path, report_path = write_result(res, args.output)
    rep = res.report
    print(f"{cfg.name}: {res.status}")
    print(f"  T1 = {_fmt(rep.get('T1'))}")
    print(f"  sup V after T1 = {_fmt(rep.get('sup_V_after_T1'))}  (epsilon = {cfg.controller.epsilon!r})")
    print(f"  max Lambda = {_fmt(rep.get('max_Lambda'))}")
    if res.message:
        print(f"  error: {res.message}", file=sys.stderr)
    print(f"  trace: {trace_path}\n  report: {report_path}")
    return res.exit_code


def cmd_sweep(args):
    cfg = load_config(args.config)
    if cfg.sweep.empty:
        raise ConfigError("config has no sweep block (or it is empty)")
    results, rows, table = run_sweep(cfg, args.output, args.workers)
    widths = (28, 10, 8, 20, 10, 16, 14)
    head = ("label", "epsilon", "T", "status", "T1", "sup V after T1", "max Lambda")
    print("  ".join(h.ljust(w) for h, w in zip(head, widths)))
    for r in rows:
        vals = (r["label"], f"{r['epsilon']:g}", f"{r['T']:g}", r["status"],
                "-" if r["T1"] is None else f"{r['T1']:.4g}",
                "-" if r["sup_V_after_T1"] is None else f"{r['sup_V_after_T1']:.4g}",
                "-" if r["max_Lambda"] is None else f"{r['max_Lambda']:.4g}")
        print("  ".join(v.ljust(w) for v, w in zip(vals, widths)))
    print(f"table: {table}")
    return max(r.exit_code for r in results)


def cmd_bounds(args):
    cfg = load_config(args.config)
    if cfg.scenario == "raw_chain" and (cfg.plant.M is None or cfg.plant.eps_b is None):
        raise ConfigError("bounds needs plant.M and plant.eps_b declared in the config")
    built = build_run(cfg)
    pert = built.plant.perturbation
    x0n = float(np.linalg.norm(built.x0))
    mu_star = cfg.analysis.mu_star
    if mu_star is not None and not mu_star < x0n:
        raise ConfigError(f"analysis.mu_star={mu_star} must be below ||x0||={x0n:.6g}")
    rep = bound_report(built.params.P, pert.M, pert.eps_b, built.params.epsilon,
                       cfg.analysis.theta, x0n, mu_star)
    print(f"# {cfg.name}: M={pert.M!r} eps_b={pert.eps_b!r} epsilon={built.params.epsilon!r} "
          f"theta={cfg.analysis.theta!r}")
    print(rep.format())
    return EXIT_OK


def cmd_are(args):
    Q = np.eye(args.n) if args.q_diag is None else np.diag(args.q_diag)
    if Q.shape != (args.n, args.n):
        raise ConfigError(f"--q-diag needs {args.n} entries")
    sol = solve_are(AreProblem(ChainStructure(args.n), args.gamma, Q), tol=args.tol)
    out = {
        "n": args.n, "gamma": args.gamma, "Q_diag": np.diag(Q).tolist(),
        "P": sol.P.tolist(), "residual_norm": sol.residual_norm,
        "lambda_min_P": sol.lambda_min_P, "lambda_max_P": sol.lambda_max_P,
        "alpha_max": alpha_bound(sol, Q, args.n) if args.n >= 2 else "not applicable",
    }
    print(yaml.safe_dump(out, sort_keys=False), end="")
    return EXIT_OK


def cmd_check(args):
    try:
        trace = read_trace(args.trace)
    except FileNotFoundError:
        raise ConfigError(f"trace not found: {args.trace}") from None
    params = plant = None
    meta_cfg = trace.metadata.get("config")
    if meta_cfg is not None:
        built = build_run(parse_config(meta_cfg))
        params, plant = built.params, built.plant
    else:
        print("no sidecar config: running structural checks only")
    results = check_trace(trace, params, plant)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


def build_parser():
    ap = argparse.ArgumentParser(prog="lyapredesign", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one config and write trace + report")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (overrides output.directory)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the sweep block of a config")
    p.add_argument("config")
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="print the closed-form bound report")
    p.add_argument("config")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("are", help="solve the chain Riccati equation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--q-diag", type=float, nargs="+")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_are)

    p = sub.add_parser("check", help="re-validate invariants on a stored trace")
    p.add_argument("trace")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
