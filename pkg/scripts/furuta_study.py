"""Furuta pendulum: saturated versus unsaturated actuator at two step sizes."""

import argparse
from dataclasses import replace
from pathlib import Path

from lyapredesign.config import build_run, load_config
from lyapredesign.runner import execute
from lyapredesign.sim import SimConfig

ROOT = Path(__file__).resolve().parents[1]


def fmt(v):
    return "-" if v is None else f"{v:.4g}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dt", type=float, nargs="+", default=[1e-3, 1e-4])
    args = ap.parse_args()
    first = True
    for name in ("furuta_eps05", "furuta_eps1"):
        base = load_config(ROOT / "configs" / f"{name}.yaml")
        if first:
            built = build_run(base)
            loop = built.scenario_model
            print(f"chain scale s = {loop.scale:.6g}, alpha bound = {built.params.alpha_max:.6g}, "
                  f"V0 = {float(built.x0 @ built.params.P.P @ built.x0):.6g}")
            first = False
        for saturate in (True, False):
            for dt in args.dt:
                cfg = replace(base, furuta=replace(base.furuta, saturate=saturate),
                              sim=SimConfig(dt, base.sim.t_end, "euler", max(1, round(1e-3 / dt))))
                res = execute(cfg)
                r = res.report
                print(f"{name:13s} sat={saturate!s:5s} dt={dt:.0e} {res.status:18s} "
                      f"T1={fmt(r.get('T1'))} supV={fmt(r.get('sup_V_after_T1'))} "
                      f"late|theta_p|={fmt(r.get('max_abs_theta_p_late'))} "
                      f"max|Vm| after T1={fmt(r.get('max_abs_Vm_after_T1'))}")


if __name__ == "__main__":
    main()
