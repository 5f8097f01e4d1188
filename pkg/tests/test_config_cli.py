import csv
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from lyapredesign.cli import main
from lyapredesign.config import (
    build_run,
    dump_config,
    expand_sweep,
    load_config,
    parse_config,
    with_f_bound,
)
from lyapredesign.errors import ConfigError
from lyapredesign.runner import execute
from lyapredesign.sim import read_trace, sidecar_path

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SHIPPED = sorted(CONFIGS.glob("*.yaml"))
EXPECTED_EXIT = {
    "alpha_violation": 1,
    "furuta_eps05": 2,
    "furuta_eps1": 2,
    "raw_chain_uniformity": 0,
    "scenario4_eps1": 0,
    "scenario4_eps1e-2": 0,
    "scenario4_eps1e-4": 3,
    "sweep_eps": 0,
}


def _raw(**over):
    d = {
        "name": "t", "scenario": "raw_chain",
        "plant": {"n": 2, "f": {"type": "cosine", "amplitude": 1.0, "angular_frequency": 5.0},
                  "M": 1.0, "eps_b": 0.0},
        "controller": {"gamma": 1.0, "alpha": 0.1, "T": 2.0, "epsilon": 1.0},
        "initial_state": [5.0, 0.0],
        "sim": {"dt": 1e-3, "t_end": 3.0},
    }
    d.update(over)
    return d


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_every_config_is_named():
    assert {p.stem for p in SHIPPED} == set(EXPECTED_EXIT)


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_config_round_trip(path):
    cfg = load_config(path)
    assert parse_config(cfg.to_dict()) == cfg
    assert parse_config(yaml.safe_load(dump_config(cfg))) == cfg


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_cli_exit_codes_and_runtime(path, tmp_path):
    t0 = time.perf_counter()
    code = main(["run", str(path), "--output", str(tmp_path)])
    assert time.perf_counter() - t0 < 10.0
    assert code == EXPECTED_EXIT[path.stem]
    if code in (0, 2, 3):
        # the trace prefix is kept even when the run aborts
        tr = read_trace(tmp_path / f"{path.stem}.csv")
        assert len(tr) > 0
        assert sidecar_path(tmp_path / f"{path.stem}.csv").exists()
        rep = yaml.safe_load((tmp_path / f"{path.stem}.report.yaml").read_text())
        assert rep["exit_code"] == code


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "lyapredesign", "run",
                        str(CONFIGS / "alpha_violation.yaml"), "--output", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "0.183" in r.stderr


def test_config_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(_write(tmp_path, _raw(extra=1)))]) == 1
    assert main(["run", str(_write(tmp_path, _raw(initial_state=[1.0])))]) == 1
    assert main(["are", "--n", "2", "--gamma", "2.0"]) == 1
    assert main(["are", "--n", "2", "--gamma", "1.0", "--q-diag", "1"]) == 1
    assert main(["check", str(tmp_path / "nope.csv")]) == 1
    assert main(["sweep", str(CONFIGS / "scenario4_eps1.yaml")]) == 1
    err = capsys.readouterr().err
    assert err.count("config error") == 8


@pytest.mark.parametrize("mutate, match", [
    (lambda d: d["controller"].update(gamma=0.0), "gamma"),
    (lambda d: d["controller"].update(T=-1.0), "T"),
    (lambda d: d["controller"].update(epsilon=0.0), "epsilon"),
    (lambda d: d.update(scenario="pendulum"), "scenario"),
    (lambda d: d["sim"].update(method="rk45"), "method"),
    (lambda d: d["plant"].update(f={"type": "square"}), "square"),
    (lambda d: d.update(torsional={}), "torsional"),
])
def test_parse_rejects(mutate, match):
    d = _raw()
    mutate(d)
    with pytest.raises(ConfigError, match=match):
        build_run(parse_config(d))


def test_alpha_auto_and_declared_bounds():
    built = build_run(parse_config(_raw(controller={"gamma": 1.0, "alpha": "auto", "T": 2.0,
                                                    "epsilon": 1.0})))
    assert built.params.alpha == pytest.approx(0.9 * 0.1830127, rel=1e-6)
    d = _raw()
    d["plant"]["M"] = 0.5  # cosine amplitude 1 exceeds the declared bound
    with pytest.raises(ConfigError):
        build_run(parse_config(d))


def test_are_command(capsys):
    assert main(["are", "--n", "2", "--gamma", "1.0"]) == 0
    out = yaml.safe_load(capsys.readouterr().out)
    s3 = np.sqrt(3.0)
    assert np.allclose(out["P"], [[s3, 1.0], [1.0, s3]], atol=1e-12)
    assert out["alpha_max"] == pytest.approx(0.18301, abs=1e-5)
    assert main(["are", "--n", "1", "--gamma", "1.0"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["alpha_max"] == "not applicable"
    assert main(["are", "--n", "3", "--gamma", "0.5", "--q-diag", "1", "2", "3"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["residual_norm"] <= 1e-10


def test_bounds_command(tmp_path, capsys):
    assert main(["bounds", str(CONFIGS / "raw_chain_uniformity.yaml")]) == 0
    out = capsys.readouterr().out
    assert "10.92" in out and "16.1" in out
    d = _raw()
    d["plant"].update(M=0.0, f={"type": "constant", "value": 0.0})
    assert main(["bounds", str(_write(tmp_path, d))]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.strip().startswith("sigma1"))
    assert float(line.split()[-1]) == 0.0
    d = _raw()
    d["plant"].pop("M")
    assert main(["bounds", str(_write(tmp_path, d, "nom.yaml"))]) == 1


def test_sweep_expansion():
    cfg = load_config(CONFIGS / "raw_chain_uniformity.yaml")
    runs = expand_sweep(cfg)
    assert len(runs) == 6
    assert len({label for label, _ in runs}) == 6
    runs = [r for _, r in runs]
    assert {tuple(r.initial_state) for r in runs} == {(5.0, 0.0), (50.0, 0.0), (500.0, 0.0)}
    assert {r.plant.M for r in runs} == {1.0, 10.0}
    big = with_f_bound(cfg, 10.0)
    assert big.plant.f.sup_bound() == pytest.approx(10.0)


def test_sweep_command(tmp_path, capsys):
    code = main(["sweep", str(CONFIGS / "sweep_eps.yaml"), "--output", str(tmp_path),
                 "--workers", "1"])
    assert code == 3  # the smallest epsilon diverges under explicit Euler
    with open(tmp_path / "sweep_eps.sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["epsilon"]) for r in rows] == [1.0, 0.01, 0.0001]
    assert [r["status"] for r in rows] == ["ok", "ok", "Divergence"]
    assert "table:" in capsys.readouterr().out


def test_check_command(tmp_path, capsys):
    cfg = CONFIGS / "scenario4_eps1.yaml"
    assert main(["run", str(cfg), "--output", str(tmp_path)]) == 0
    trace = tmp_path / "scenario4_eps1.csv"
    assert main(["check", str(trace)]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "scaled_consistency" in out

    lines = trace.read_text().splitlines()
    cols = lines[0].split(",")
    k = len(lines) // 2
    row = lines[k].split(",")
    row[cols.index("u")] = repr(float(row[cols.index("u")]) + 5.0)
    lines[k] = ",".join(row)
    trace.write_text("\n".join(lines) + "\n")
    assert main(["check", str(trace)]) == 2
    assert "[FAIL] control_law" in capsys.readouterr().out


def test_run_result_keeps_prefix_on_invariant_error():
    res = execute(load_config(CONFIGS / "furuta_eps05.yaml"))
    assert res.exit_code == 2 and res.status == "SingularityReached"
    assert res.trace is not None and res.trace.t[-1] < 1.0
    assert not res.trace.barrier.any()
