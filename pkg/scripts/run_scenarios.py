"""Run every shipped config, write traces and reports, and print a summary table."""

import argparse
from pathlib import Path

from lyapredesign.config import load_config
from lyapredesign.errors import ConfigError
from lyapredesign.runner import execute, write_result

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=ROOT / "configs", type=Path)
    ap.add_argument("--output", default=ROOT / "out", type=Path)
    args = ap.parse_args()
    print(f"{'config':24s} {'status':20s} {'T1':>8s} {'sup V/eps':>10s} {'max Lambda':>11s}")
    for path in sorted(args.configs.glob("*.yaml")):
        cfg = load_config(path)
        try:
            res = execute(cfg)
        except ConfigError as exc:
            print(f"{cfg.name:24s} config error: {exc}")
            continue
        write_result(res, args.output)
        rep = res.report
        T1 = rep.get("T1")
        supV = rep.get("sup_V_after_T1")
        print(f"{cfg.name:24s} {res.status:20s} "
              f"{'-' if T1 is None else format(T1, '8.4g'):>8s} "
              f"{'-' if supV is None else format(supV / cfg.controller.epsilon, '10.4g'):>10s} "
              f"{rep['max_Lambda']:11.4g}")


if __name__ == "__main__":
    main()
