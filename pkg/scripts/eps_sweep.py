"""Barrier-width sweep on the torsional scenario at several Euler step sizes.

Shows that the smallest width only survives once the step is small enough.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from lyapredesign.config import load_config
from lyapredesign.runner import execute
from lyapredesign.sim import SimConfig

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=ROOT / "configs" / "sweep_eps.yaml", type=Path)
    ap.add_argument("--dt", type=float, nargs="+", default=[1e-3, 5e-4, 2e-4])
    args = ap.parse_args()
    base = load_config(args.config)
    eps_values = base.sweep.epsilon or (base.controller.epsilon,)
    print(f"{'dt':>8s} {'eps':>8s} {'status':12s} {'T1':>8s} {'sup V/eps':>10s} "
          f"{'max Lambda':>11s} {'final-half':>11s}")
    for dt in args.dt:
        stride = max(1, round(1e-3 / dt))
        for eps in eps_values:
            cfg = replace(base, controller=replace(base.controller, epsilon=eps),
                          sim=SimConfig(dt, base.sim.t_end, base.sim.method, stride))
            res = execute(cfg)
            r = res.report
            supV = r.get("sup_V_after_T1")
            fh = r.get("max_Lambda_final_half")
            print(f"{dt:8.0e} {eps:8.0e} {res.status:12s} "
                  f"{'-' if r.get('T1') is None else format(r['T1'], '.4g'):>8s} "
                  f"{'-' if supV is None else format(supV / eps, '.4g'):>10s} "
                  f"{r['max_Lambda']:11.4g} {'-' if fh is None else format(fh, '.4g'):>11s}")


if __name__ == "__main__":
    main()
