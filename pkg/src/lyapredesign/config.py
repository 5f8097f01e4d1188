"""Run configuration: a single YAML file parsed into frozen dataclasses.

The grammar is documented in README.md.  ``parse_config(cfg.to_dict())``
reproduces ``cfg`` exactly.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .controller import ControllerParams
from .errors import ConfigError
from .plant import ZERO, Constant, PerturbationSpec, PlantModel, Scaled, Signal, signal_from_dict
from .riccati import AreProblem, ChainStructure, alpha_bound, solve_are
from .scenarios import (
    FurutaParams,
    MotorParams,
    QuinticTrajectory,
    TorsionalParams,
    furuta_closed_loop_plant,
    torsional_error_plant,
)
from .sim import SimConfig

SCENARIOS = ("raw_chain", "torsional", "furuta")
AUTO_ALPHA_FRACTION = 0.9


@dataclass(frozen=True)
class ChainPlantConfig:
    n: int = 2
    b: Signal = Constant(1.0)
    b_lower: Optional[float] = None
    f: Signal = ZERO
    delta_b: Signal = ZERO
    # declared bounds; default to the signals' own sup bounds when omitted
    M: Optional[float] = None
    eps_b: Optional[float] = None


@dataclass(frozen=True)
class ControllerConfig:
    gamma: float
    alpha: object  # float or "auto"
    T: float
    epsilon: float
    Q: Optional[tuple] = None  # None means identity
    enforce_alpha_bound: bool = True
    Gamma0: float = 0.0

    def __post_init__(self):
        if not (self.alpha == "auto" or isinstance(self.alpha, float)):
            raise ConfigError(f"alpha must be a number or 'auto', got {self.alpha!r}")
        if self.Gamma0 < 0.0:
            raise ConfigError("Gamma0 must be nonnegative")


@dataclass(frozen=True)
class TorsionalConfig:
    params: TorsionalParams = field(default_factory=TorsionalParams)
    trajectory: QuinticTrajectory = field(default_factory=QuinticTrajectory)


@dataclass(frozen=True)
class FurutaConfig:
    params: FurutaParams = field(default_factory=FurutaParams)
    saturate: bool = True


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    trace: Optional[str] = None  # file name inside directory; defaults to <name>.csv
    report: Optional[str] = None  # defaults to <name>.report.yaml


@dataclass(frozen=True)
class SweepConfig:
    epsilon: tuple = ()
    T: tuple = ()
    x0: tuple = ()
    M: tuple = ()
    workers: Optional[int] = None

    @property
    def empty(self):
        return not (self.epsilon or self.T or self.x0 or self.M)


@dataclass(frozen=True)
class AnalysisConfig:
    theta: float = 0.5
    mu_star: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    name: str
    scenario: str
    controller: ControllerConfig
    initial_state: tuple
    sim: SimConfig = field(default_factory=SimConfig)
    plant: Optional[ChainPlantConfig] = None
    torsional: Optional[TorsionalConfig] = None
    furuta: Optional[FurutaConfig] = None
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    @property
    def n(self):
        if self.scenario == "raw_chain":
            return self.plant.n
        return 2 if self.scenario == "torsional" else 4

    def to_dict(self) -> dict:
        return _config_to_dict(self)


# --------------------------------------------------------------- parsing

def _take(d, key, kind, default=dataclasses.MISSING, where=""):
    if key not in d:
        if default is dataclasses.MISSING:
            raise ConfigError(f"missing required field '{where}{key}'")
        return default
    v = d[key]
    if v is None:
        return None
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        if kind is bool:
            if not isinstance(v, bool):
                raise TypeError
            return v
        if kind is str:
            if not isinstance(v, str):
                raise TypeError
            return v
    except (TypeError, ValueError):
        raise ConfigError(f"field '{where}{key}' must be {kind.__name__}, got {v!r}") from None
    return v


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"block '{where}' must be a mapping")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown field(s) in '{where}': {sorted(extra)}")


def _vector(v, where):
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"'{where}' must be a list of numbers") from None
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"'{where}' must be a finite vector")
    return tuple(arr.tolist())


def _parse_Q(v, n):
    if v is None or v == "identity":
        return None
    if isinstance(v, dict):
        _check_keys(v, ("diag",), "controller.Q")
        d = _vector(v["diag"], "controller.Q.diag")
        return tuple(tuple(row) for row in np.diag(d).tolist())
    try:
        Q = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("controller.Q must be 'identity', {diag: [...]}, or a matrix") from None
    if Q.shape != (n, n):
        raise ConfigError(f"controller.Q must be {n}x{n}")
    return tuple(tuple(row) for row in Q.tolist())


def _parse_signal(d, key, default, where):
    if key not in d:
        return default
    return signal_from_dict(d[key])


def _parse_dataclass(cls, d, where, overrides=None):
    """Numeric fields of a flat parameter dataclass, with defaults."""
    overrides = overrides or {}
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(d, names, where)
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in overrides:
            if f.name in d:
                kw[f.name] = overrides[f.name](d[f.name])
            continue
        if f.name in d:
            kw[f.name] = _take(d, f.name, float, where=where + ".")
    return cls(**kw)


def parse_config(data: dict, name: str = "run") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys(data, ("name", "scenario", "plant", "torsional", "furuta", "controller",
                       "initial_state", "sim", "output", "sweep", "analysis"), "root")
    name = _take(data, "name", str, name)
    scenario = _take(data, "scenario", str)
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")

    plant = torsional = furuta = None
    if scenario == "raw_chain":
        d = data.get("plant")
        if d is None:
            raise ConfigError("scenario raw_chain needs a 'plant' block")
        _check_keys(d, ("n", "b", "b_lower", "f", "delta_b", "M", "eps_b"), "plant")
        plant = ChainPlantConfig(
            n=_take(d, "n", int, where="plant."),
            b=_parse_signal(d, "b", Constant(1.0), "plant"),
            b_lower=_take(d, "b_lower", float, None, "plant."),
            f=_parse_signal(d, "f", ZERO, "plant"),
            delta_b=_parse_signal(d, "delta_b", ZERO, "plant"),
            M=_take(d, "M", float, None, "plant."),
            eps_b=_take(d, "eps_b", float, None, "plant."),
        )
        if plant.n < 1:
            raise ConfigError("plant.n must be positive")
    elif "plant" in data:
        raise ConfigError(f"'plant' block applies to raw_chain only; use '{scenario}'")

    if scenario == "torsional":
        d = data.get("torsional") or {}
        _check_keys(d, [f.name for f in dataclasses.fields(TorsionalParams)] + ["trajectory"],
                    "torsional")
        traj = _parse_dataclass(QuinticTrajectory, d.get("trajectory") or {}, "torsional.trajectory")
        params = _parse_dataclass(
            TorsionalParams, {k: v for k, v in d.items() if k != "trajectory"}, "torsional",
            overrides={"delta_j": signal_from_dict, "phi": signal_from_dict})
        torsional = TorsionalConfig(params, traj)
    elif "torsional" in data:
        raise ConfigError("'torsional' block given for another scenario")

    if scenario == "furuta":
        d = data.get("furuta") or {}
        _check_keys(d, [f.name for f in dataclasses.fields(FurutaParams)] + ["saturate"], "furuta")
        motor = _parse_dataclass(MotorParams, d.get("motor") or {}, "furuta.motor")
        params = _parse_dataclass(
            FurutaParams, {k: v for k, v in d.items() if k != "saturate"}, "furuta",
            overrides={"motor": lambda _: motor})
        if "motor" not in d:
            params = replace(params, motor=motor)
        furuta = FurutaConfig(params, _take(d, "saturate", bool, True, "furuta."))
    elif "furuta" in data:
        raise ConfigError("'furuta' block given for another scenario")

    n = plant.n if plant else (2 if scenario == "torsional" else 4)

    d = data.get("controller")
    if d is None:
        raise ConfigError("missing 'controller' block")
    _check_keys(d, ("gamma", "alpha", "T", "epsilon", "Q", "enforce_alpha_bound", "Gamma0"),
                "controller")
    alpha = d.get("alpha", "auto")
    if alpha != "auto":
        alpha = _take(d, "alpha", float, where="controller.")
    controller = ControllerConfig(
        gamma=_take(d, "gamma", float, where="controller."),
        alpha=alpha,
        T=_take(d, "T", float, where="controller."),
        epsilon=_take(d, "epsilon", float, where="controller."),
        Q=_parse_Q(d.get("Q"), n),
        enforce_alpha_bound=_take(d, "enforce_alpha_bound", bool, True, "controller."),
        Gamma0=_take(d, "Gamma0", float, 0.0, "controller."),
    )

    x0 = _vector(_take(data, "initial_state", list), "initial_state")
    if len(x0) != n:
        raise ConfigError(f"initial_state has {len(x0)} entries, scenario order is {n}")

    d = data.get("sim") or {}
    _check_keys(d, ("dt", "t_end", "method", "record_stride"), "sim")
    sim = SimConfig(
        dt=_take(d, "dt", float, 1e-3, "sim."),
        t_end=_take(d, "t_end", float, 15.0, "sim."),
        method=_take(d, "method", str, "euler", "sim."),
        record_stride=_take(d, "record_stride", int, 1, "sim."),
    )

    d = data.get("output") or {}
    _check_keys(d, ("directory", "trace", "report"), "output")
    output = OutputConfig(_take(d, "directory", str, "out", "output."),
                          _take(d, "trace", str, None, "output."),
                          _take(d, "report", str, None, "output."))

    d = data.get("sweep") or {}
    _check_keys(d, ("epsilon", "T", "x0", "M", "workers"), "sweep")
    sweep = SweepConfig(
        epsilon=_vector(d.get("epsilon", []), "sweep.epsilon"),
        T=_vector(d.get("T", []), "sweep.T"),
        x0=tuple(_vector(v, "sweep.x0") for v in d.get("x0", [])),
        M=_vector(d.get("M", []), "sweep.M"),
        workers=_take(d, "workers", int, None, "sweep."),
    )
    if any(len(v) != n for v in sweep.x0):
        raise ConfigError(f"every sweep.x0 entry needs {n} components")
    if sweep.M and scenario != "raw_chain":
        raise ConfigError("sweep.M applies to raw_chain only")

    d = data.get("analysis") or {}
    _check_keys(d, ("theta", "mu_star"), "analysis")
    analysis = AnalysisConfig(_take(d, "theta", float, 0.5, "analysis."),
                              _take(d, "mu_star", float, None, "analysis."))

    return RunConfig(name, scenario, controller, x0, sim, plant, torsional, furuta,
                     output, sweep, analysis)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return parse_config(data, name=path.stem)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def _params_dict(obj, signal_fields=()):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if f.name in signal_fields:
            out[f.name] = v.to_dict()
        elif dataclasses.is_dataclass(v):
            out[f.name] = _params_dict(v)
        else:
            out[f.name] = v
    return out


def _config_to_dict(cfg: RunConfig) -> dict:
    c = cfg.controller
    d = {
        "name": cfg.name,
        "scenario": cfg.scenario,
        "controller": {
            "gamma": c.gamma, "alpha": c.alpha, "T": c.T, "epsilon": c.epsilon,
            "Q": "identity" if c.Q is None else [list(r) for r in c.Q],
            "enforce_alpha_bound": c.enforce_alpha_bound, "Gamma0": c.Gamma0,
        },
        "initial_state": list(cfg.initial_state),
        "sim": dataclasses.asdict(cfg.sim),
    }
    if cfg.plant is not None:
        p = cfg.plant
        d["plant"] = {"n": p.n, "b": p.b.to_dict(), "b_lower": p.b_lower, "f": p.f.to_dict(),
                      "delta_b": p.delta_b.to_dict(), "M": p.M, "eps_b": p.eps_b}
    if cfg.torsional is not None:
        t = _params_dict(cfg.torsional.params, ("delta_j", "phi"))
        t["trajectory"] = dataclasses.asdict(cfg.torsional.trajectory)
        d["torsional"] = t
    if cfg.furuta is not None:
        fd = _params_dict(cfg.furuta.params)
        fd["saturate"] = cfg.furuta.saturate
        d["furuta"] = fd
    d["output"] = dataclasses.asdict(cfg.output)
    s = cfg.sweep
    d["sweep"] = {"epsilon": list(s.epsilon), "T": list(s.T), "x0": [list(v) for v in s.x0],
                  "M": list(s.M), "workers": s.workers}
    d["analysis"] = dataclasses.asdict(cfg.analysis)
    return d


# --------------------------------------------------------------- building

@dataclass(frozen=True)
class BuiltRun:
    config: RunConfig
    plant: PlantModel
    params: ControllerParams
    x0: np.ndarray
    scenario_model: object = None  # TorsionalModel, FurutaLoop or None


def solve_for(cfg: RunConfig):
    Q = np.eye(cfg.n) if cfg.controller.Q is None else np.asarray(cfg.controller.Q)
    return solve_are(AreProblem(ChainStructure(cfg.n), cfg.controller.gamma, Q))


def resolve_alpha(cfg: RunConfig, sol) -> float:
    if cfg.controller.alpha != "auto":
        return cfg.controller.alpha
    if cfg.n < 2:
        raise ConfigError("alpha 'auto' needs n >= 2; give alpha explicitly for n = 1")
    return AUTO_ALPHA_FRACTION * alpha_bound(sol, sol.Q, cfg.n)


def build_plant(cfg: RunConfig):
    """(PlantModel, scenario model or None) for the configured scenario."""
    if cfg.scenario == "raw_chain":
        p = cfg.plant
        pert = PerturbationSpec(p.f, p.delta_b,
                                p.f.sup_bound() if p.M is None else p.M,
                                p.delta_b.sup_bound() if p.eps_b is None else p.eps_b)
        b_lower = p.b_lower
        if b_lower is None:
            b_lower = 0.5 * p.b.value if isinstance(p.b, Constant) else 1e-9
        return PlantModel(ChainStructure(p.n), p.b, b_lower, pert), None
    if cfg.scenario == "torsional":
        model = torsional_error_plant(cfg.torsional.params, cfg.torsional.trajectory)
        return model.plant, model
    loop = furuta_closed_loop_plant(cfg.furuta.params, saturate=cfg.furuta.saturate)
    return loop.plant, loop


def build_run(cfg: RunConfig, sol=None) -> BuiltRun:
    sol = solve_for(cfg) if sol is None else sol
    plant, model = build_plant(cfg)
    plant.perturbation.check_bounds(cfg.sim.t_end, samples=10_000)
    plant.check_b(cfg.sim.t_end, samples=1_000)
    c = cfg.controller
    params = ControllerParams(c.gamma, resolve_alpha(cfg, sol), c.T, c.epsilon, sol,
                              c.enforce_alpha_bound)
    x0 = np.asarray(cfg.initial_state, dtype=float)
    if cfg.scenario == "furuta":
        # furuta initial_state is physical (theta_r, theta_p, theta_r', theta_p')
        x0 = model.to_chain(x0)
    return BuiltRun(cfg, plant, params, x0, model)


def with_f_bound(cfg: RunConfig, M: float) -> RunConfig:
    """raw_chain config whose f is rescaled to sup bound M (sweeps over M)."""
    p = cfg.plant
    base = p.f.sup_bound()
    if base == 0.0:
        raise ConfigError("cannot sweep M with f identically zero")
    return replace(cfg, plant=replace(p, f=Scaled(M / base, p.f), M=M))


def expand_sweep(cfg: RunConfig):
    """Cartesian product of the sweep lists as (label, RunConfig) pairs."""
    s = cfg.sweep
    eps = s.epsilon or (None,)
    Ts = s.T or (None,)
    x0s = s.x0 or (None,)
    Ms = s.M or (None,)
    runs = []
    for e, T, x0, M in itertools.product(eps, Ts, x0s, Ms):
        c = cfg
        parts = []
        if e is not None:
            c = replace(c, controller=replace(c.controller, epsilon=e))
            parts.append(f"eps{e:g}")
        if T is not None:
            c = replace(c, controller=replace(c.controller, T=T))
            parts.append(f"T{T:g}")
        if x0 is not None:
            c = replace(c, initial_state=x0)
            parts.append("x0_" + "_".join(f"{v:g}" for v in x0))
        if M is not None:
            c = with_f_bound(c, M)
            parts.append(f"M{M:g}")
        label = "-".join(parts) or "base"
        runs.append((label, replace(c, name=f"{cfg.name}-{label}", sweep=SweepConfig())))
    return runs
