"""Fixed-step closed-loop simulation with the adaptive gain integrated alongside x."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import yaml

from .controller import (
    ControllerParams,
    ControllerState,
    Mode,
    combined_control,
    gamma_dot,
    lyapunov,
)
from .errors import ConfigError, ControllerInvariantError, Divergence
from .plant import PlantModel, plant_rhs

METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 15.0
    method: str = "euler"
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0 or not self.t_end > 0.0:
            raise ConfigError("dt and t_end must be positive")
        if not self.dt < self.t_end:
            raise ConfigError("dt must be smaller than t_end")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigError("record_stride must be a positive integer")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class AugmentedState:
    x: np.ndarray
    Gamma: float = 0.0


# law(t, x, Gamma) -> (u, Gamma_dot)
Law = Callable[[float, np.ndarray, float], tuple]


def step(plant: PlantModel, law: Law, state: AugmentedState, t: float, dt: float,
         method: str = "euler", u_now: Optional[float] = None) -> AugmentedState:
    """Advance the augmented state (x, Gamma) by one step.

    ``u_now`` lets the caller pass the control already evaluated at (t, x) for
    the Euler rule; RK4 re-evaluates the law at every stage.
    """

    def field_(tt, x, G):
        u, gd = law(tt, x, G)
        return plant_rhs(plant, tt, x, plant.applied_input(tt, x, u)), gd

    x, G = state.x, state.Gamma
    if method == "euler":
        if u_now is None:
            dx, gd = field_(t, x, G)
        else:
            _, gd = law(t, x, G)
            dx = plant_rhs(plant, t, x, plant.applied_input(t, x, u_now))
        return AugmentedState(x + dt * dx, G + dt * gd)
    if method == "rk4":
        k1, g1 = field_(t, x, G)
        k2, g2 = field_(t + dt / 2, x + dt / 2 * k1, G + dt / 2 * g1)
        k3, g3 = field_(t + dt / 2, x + dt / 2 * k2, G + dt / 2 * g2)
        k4, g4 = field_(t + dt, x + dt * k3, G + dt * g3)
        return AugmentedState(x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4),
                              G + dt / 6 * (g1 + 2 * g2 + 2 * g3 + g4))
    raise ConfigError(f"unknown method {method!r}")


@dataclass(frozen=True)
class Trace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    V: np.ndarray
    Lambda: np.ndarray
    kappa: np.ndarray
    Gamma: np.ndarray
    barrier: np.ndarray  # bool per row: True once in barrier mode
    T1: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.x.shape[1]

    def __len__(self):
        return self.t.size

    @property
    def modes(self):
        return np.where(self.barrier, Mode.BARRIER.value, Mode.REACHING.value)

    def reaching(self):
        return ~self.barrier

    def after(self, t0):
        return self.t >= t0

    def summary(self) -> dict:
        post = self.barrier
        return {
            "T1": self.T1,
            "sup_V_after_T1": float(self.V[post].max()) if post.any() else None,
            "max_Lambda": float(np.max(self.Lambda)) if len(self) else None,
            "samples": len(self),
        }


class _Recorder:
    def __init__(self, n, capacity):
        self.t = np.empty(capacity)
        self.x = np.empty((capacity, n))
        self.cols = {k: np.empty(capacity) for k in ("u", "V", "Lambda", "kappa", "Gamma")}
        self.barrier = np.zeros(capacity, dtype=bool)
        self.k = 0

    def add(self, t, x, out, Gamma):
        k = self.k
        self.t[k] = t
        self.x[k] = x
        c = self.cols
        c["u"][k], c["V"][k], c["Lambda"][k], c["kappa"][k], c["Gamma"][k] = (
            out.u, out.V, out.Lambda, out.kappa, Gamma)
        self.barrier[k] = out.mode is Mode.BARRIER
        self.k += 1

    def trace(self, T1, metadata):
        k = self.k
        c = self.cols
        return Trace(self.t[:k].copy(), self.x[:k].copy(), c["u"][:k].copy(), c["V"][:k].copy(),
                     c["Lambda"][:k].copy(), c["kappa"][:k].copy(), c["Gamma"][:k].copy(),
                     self.barrier[:k].copy(), T1, metadata)


def params_snapshot(params: ControllerParams) -> dict:
    return {
        "gamma": params.gamma, "alpha": params.alpha, "T": params.T,
        "epsilon": params.epsilon, "n": params.n,
        "P": params.P.P.tolist(), "Q": params.P.Q.tolist(),
        "alpha_max": params.alpha_max,
    }


def simulate(plant: PlantModel, params: ControllerParams, x0, config: SimConfig,
             Gamma0: float = 0.0, metadata: Optional[dict] = None) -> Trace:
    """Closed loop of the chain with the switching controller.

    The switch to barrier mode happens at the first sample with V <= epsilon/2;
    that sample is recorded in barrier mode and its time is T1.  Controller
    invariant errors and divergence are re-raised with ``err.trace`` holding
    the rows recorded before the failing sample.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (plant.n,) or params.n != plant.n:
        raise ConfigError(f"dimension mismatch: x0 {x.shape}, plant n={plant.n}, P n={params.n}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("x0 must be finite")
    meta = {"params": params_snapshot(params), "sim": asdict(config)}
    meta.update(metadata or {})

    steps, stride = config.steps, config.record_stride
    rec = _Recorder(plant.n, steps // stride + 1)
    state = ControllerState(Gamma=Gamma0)
    G = Gamma0
    half_eps = 0.5 * params.epsilon

    def law(tt, xx, GG):
        # stage evaluations keep the mode of the current step
        st = ControllerState(Gamma=GG, mode=state.mode, T1=state.T1)
        out, _ = combined_control(tt, xx, params, st, plant.b(tt))
        gd = gamma_dot(tt, xx, params) if st.mode is Mode.REACHING else 0.0
        return out.u, gd

    t = 0.0
    try:
        # overflow on the way to divergence is reported as Divergence, not warnings
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(steps + 1):
                t = k * config.dt
                V = lyapunov(x, params)
                if not math.isfinite(V):
                    raise Divergence(f"V overflowed at t={t:.6g}", t=t)
                if state.mode is Mode.REACHING and V <= half_eps:
                    state = state.switched(t)
                state = ControllerState(Gamma=G, mode=state.mode, T1=state.T1)
                out, _ = combined_control(t, x, params, state, plant.b(t))
                if k % stride == 0:
                    rec.add(t, x, out, G)
                if k == steps:
                    break
                if config.method == "euler":
                    gd = gamma_dot(t, x, params) if state.mode is Mode.REACHING else 0.0
                    x = x + config.dt * plant_rhs(plant, t, x, plant.applied_input(t, x, out.u))
                    G = G + config.dt * gd
                else:
                    nxt = step(plant, law, AugmentedState(x, G), t, config.dt, config.method)
                    x, G = nxt.x, nxt.Gamma
                if not (np.all(np.isfinite(x)) and math.isfinite(G)):
                    raise Divergence(f"state became non-finite after t={t:.6g}", t=t + config.dt)
    except (ControllerInvariantError, Divergence) as err:
        if err.t is None:
            err.t = t
        meta["error"] = f"{type(err).__name__}: {err}"
        err.trace = rec.trace(state.T1, meta)
        raise
    meta["T1"] = state.T1
    return rec.trace(state.T1, meta)


def simulate_feedback(plant: PlantModel, control: Callable[[float, np.ndarray], float], x0,
                      config: SimConfig):
    """Closed loop with a static feedback u = control(t, x).

    Returns (t, X, U) arrays at every step.
    """
    x = np.asarray(x0, dtype=float).copy()
    steps = config.steps
    ts = np.arange(steps + 1) * config.dt
    X = np.empty((steps + 1, plant.n))
    U = np.empty(steps + 1)
    law = lambda tt, xx, GG: (control(tt, xx), 0.0)
    for k, t in enumerate(ts):
        X[k] = x
        U[k] = control(t, x)
        if k == steps:
            break
        x = step(plant, law, AugmentedState(x), t, config.dt, config.method, u_now=U[k]).x
        if not np.all(np.isfinite(x)):
            raise Divergence(f"state became non-finite after t={t:.6g}", t=t)
    return ts, X, U


# ---------------------------------------------------------------- CSV export

def trace_header(n):
    return ["t"] + [f"x{i + 1}" for i in range(n)] + ["u", "V", "Lambda", "kappa", "Gamma", "mode"]


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.yaml")


def write_trace(trace: Trace, path) -> Path:
    """Write ``path`` (CSV) and its ``.meta.yaml`` sidecar; floats use repr (round-trip exact)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    modes = trace.modes
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trace_header(trace.n))
        for k in range(len(trace)):
            row = [trace.t[k], *trace.x[k], trace.u[k], trace.V[k], trace.Lambda[k],
                   trace.kappa[k], trace.Gamma[k]]
            w.writerow([repr(float(v)) for v in row] + [modes[k]])
    meta = dict(trace.metadata)
    meta["T1"] = trace.T1
    with sidecar_path(path).open("w") as fh:
        yaml.safe_dump(_plain(meta), fh, sort_keys=False)
    return path


def read_trace(path) -> Trace:
    path = Path(path)
    with path.open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = list(r)
    n = sum(1 for h in header if h.startswith("x"))
    if header != trace_header(n):
        raise ConfigError(f"unexpected trace header {header}")
    num = np.array([[float(v) for v in row[:-1]] for row in rows]).reshape(len(rows), n + 6)
    barrier = np.array([row[-1] == Mode.BARRIER.value for row in rows], dtype=bool)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = yaml.safe_load(side.read_text()) or {}
    return Trace(num[:, 0], num[:, 1:1 + n], num[:, n + 1], num[:, n + 2], num[:, n + 3],
                 num[:, n + 4], num[:, n + 5], barrier, meta.get("T1"), meta)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
