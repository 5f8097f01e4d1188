"""Perturbed chain of integrators and the time signals that drive it.

    x' = J_n x + e_n [ b(t) (1 + delta_b(t)) u + f(t) ]

Signals are small immutable objects with ``__call__(t)`` and a computable
``sup_bound()``; they compose under ``Sum`` and ``Scaled``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionMismatch
from .riccati import ChainStructure


def sign(z: float) -> float:
    """sign with the selection sign(0) = 0."""
    if z > 0.0:
        return 1.0
    if z < 0.0:
        return -1.0
    return 0.0


class Signal:
    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def sup_bound(self) -> float:
        """An upper bound on sup_t |s(t)| over t >= 0."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, other))

    def __mul__(self, gain):
        return Scaled(float(gain), self)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Constant(Signal):
    value: float

    def __call__(self, t):
        return self.value

    def sup_bound(self):
        return abs(self.value)

    def to_dict(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class Sinusoid(Signal):
    """amplitude * sin(angular_frequency * t + phase)."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0

    def __call__(self, t):
        return self.amplitude * math.sin(self.angular_frequency * t + self.phase)

    def sup_bound(self):
        return abs(self.amplitude)

    def to_dict(self):
        return {"type": "sinusoid", "amplitude": self.amplitude,
                "angular_frequency": self.angular_frequency, "phase": self.phase}

    @classmethod
    def cosine(cls, amplitude, angular_frequency):
        return cls(amplitude, angular_frequency, math.pi / 2)


@dataclass(frozen=True)
class SignOfSinusoid(Signal):
    """amplitude * sign(sin(angular_frequency * t))."""

    amplitude: float
    angular_frequency: float

    def __call__(self, t):
        return self.amplitude * sign(math.sin(self.angular_frequency * t))

    def sup_bound(self):
        return abs(self.amplitude)

    def to_dict(self):
        return {"type": "sign_of_sinusoid", "amplitude": self.amplitude,
                "angular_frequency": self.angular_frequency}


@dataclass(frozen=True)
class Sum(Signal):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def __call__(self, t):
        return sum(s(t) for s in self.terms)

    def sup_bound(self):
        return sum(s.sup_bound() for s in self.terms)

    def to_dict(self):
        return {"type": "sum", "terms": [s.to_dict() for s in self.terms]}


@dataclass(frozen=True)
class Scaled(Signal):
    gain: float
    signal: Signal

    def __call__(self, t):
        return self.gain * self.signal(t)

    def sup_bound(self):
        return abs(self.gain) * self.signal.sup_bound()

    def to_dict(self):
        return {"type": "scaled", "gain": self.gain, "signal": self.signal.to_dict()}


@dataclass(frozen=True)
class SampledTable(Signal):
    """Tabulated signal; hold_order 0 is zero-order hold, 1 is linear interpolation.

    Outside the table the end values are held.
    """

    times: tuple
    values: tuple
    hold_order: int = 1

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ConfigError("sampled table needs equal-length, non-empty times and values")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("sampled table times must be strictly increasing")
        if self.hold_order not in (0, 1):
            raise ConfigError("hold_order must be 0 or 1")
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_v", v)

    def __call__(self, t):
        if self.hold_order == 1:
            return float(np.interp(t, self._t, self._v))
        k = int(np.searchsorted(self._t, t, side="right")) - 1
        return float(self._v[max(k, 0)])

    def sup_bound(self):
        return float(np.abs(self._v).max())

    def to_dict(self):
        return {"type": "sampled_table", "times": list(self.times),
                "values": list(self.values), "hold_order": self.hold_order}


@dataclass(frozen=True)
class Polynomial(Signal):
    """sum_k coefficients[k] (t - t0)^k on [t0, t1]; clamped to the end values outside."""

    coefficients: tuple
    t0: float
    t1: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.t1 > self.t0:
            raise ConfigError("polynomial window needs t1 > t0")

    def __call__(self, t):
        s = min(max(t, self.t0), self.t1) - self.t0
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * s + c
        return acc

    def sup_bound(self):
        c = np.asarray(self.coefficients)
        cand = [0.0, self.t1 - self.t0]
        if c.size > 2:
            crit = np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polyder(c))
            cand += [r.real for r in crit
                     if abs(r.imag) < 1e-12 and 0.0 <= r.real <= self.t1 - self.t0]
        return float(max(abs(np.polynomial.polynomial.polyval(s, c)) for s in cand))

    def to_dict(self):
        return {"type": "polynomial", "coefficients": list(self.coefficients),
                "t0": self.t0, "t1": self.t1}


def eval_signal(s: Signal, t: float) -> float:
    return s(t)


def signal_from_dict(d) -> Signal:
    """Build a signal from its config mapping (see README for the grammar)."""
    if isinstance(d, (int, float)):
        return Constant(float(d))
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError(f"signal spec must be a number or a mapping with 'type': {d!r}")
    kind = d["type"]
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "sinusoid":
            return Sinusoid(float(d["amplitude"]), float(d["angular_frequency"]),
                            float(d.get("phase", 0.0)))
        if kind == "cosine":
            return Sinusoid.cosine(float(d["amplitude"]), float(d["angular_frequency"]))
        if kind == "sign_of_sinusoid":
            return SignOfSinusoid(float(d["amplitude"]), float(d["angular_frequency"]))
        if kind == "sum":
            return Sum(tuple(signal_from_dict(s) for s in d["terms"]))
        if kind == "scaled":
            return Scaled(float(d["gain"]), signal_from_dict(d["signal"]))
        if kind == "sampled_table":
            return SampledTable(tuple(d["times"]), tuple(d["values"]), int(d.get("hold_order", 1)))
        if kind == "polynomial":
            return Polynomial(tuple(d["coefficients"]), float(d["t0"]), float(d["t1"]))
    except KeyError as exc:
        raise ConfigError(f"signal of type {kind!r} is missing field {exc}") from None
    raise ConfigError(f"unknown signal type {kind!r}")


ZERO = Constant(0.0)


@dataclass(frozen=True)
class PerturbationSpec:
    """Matched perturbation f and relative input uncertainty delta_b.

    ``M`` and ``eps_b`` are declared bounds. They are for analysis and
    verification only; the controller API never receives them.
    """

    f: Signal = ZERO
    delta_b: Signal = ZERO
    M: float = 0.0
    eps_b: float = 0.0

    def __post_init__(self):
        if self.M < 0.0:
            raise ConfigError("M must be nonnegative")
        if not 0.0 <= self.eps_b < 1.0:
            raise ConfigError("eps_b must lie in [0, 1)")

    @classmethod
    def from_signals(cls, f=ZERO, delta_b=ZERO):
        """Declare the bounds as the signals' own sup bounds."""
        return cls(f, delta_b, f.sup_bound(), delta_b.sup_bound())

    def check_bounds(self, t_end, samples=100_000):
        """Sample both signals on [0, t_end]; returns (sup|f|, sup|delta_b|) observed.

        Raises ConfigError if either declared bound is violated.
        """
        ts = np.linspace(0.0, t_end, samples)
        f_sup = max(abs(self.f(t)) for t in ts)
        d_sup = max(abs(self.delta_b(t)) for t in ts)
        if f_sup > self.M * (1 + 1e-12):
            raise ConfigError(f"sup|f| = {f_sup:.6g} exceeds declared M = {self.M:.6g}")
        if d_sup > self.eps_b * (1 + 1e-12):
            raise ConfigError(f"sup|delta_b| = {d_sup:.6g} exceeds declared eps_b = {self.eps_b:.6g}")
        return f_sup, d_sup


Actuator = Callable[[float, np.ndarray, float], float]


@dataclass(frozen=True)
class PlantModel:
    structure: ChainStructure
    b: Signal = field(default_factory=lambda: Constant(1.0))
    b_lower: float = 0.5
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    # maps the commanded u to the input actually delivered (e.g. saturation)
    actuator: Optional[Actuator] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.b_lower > 0.0:
            raise ConfigError("b_lower must be positive")

    @property
    def n(self):
        return self.structure.n

    def check_b(self, t_end, samples=10_000):
        for t in np.linspace(0.0, t_end, samples):
            if not self.b(t) > self.b_lower:
                raise ConfigError(f"b({t:.6g}) = {self.b(t):.6g} is not above b_lower = {self.b_lower}")

    def applied_input(self, t, x, u):
        if self.actuator is None:
            return u
        return self.actuator(t, x, u)


def chain_plant(n, f=ZERO, delta_b=ZERO, b=None, b_lower=None, M=None, eps_b=None):
    """Convenience constructor; undeclared bounds default to the signals' sup bounds."""
    b = Constant(1.0) if b is None else b
    if b_lower is None:
        b_lower = 0.5 * b.sup_bound() if isinstance(b, Constant) else 1e-9
    pert = PerturbationSpec(f, delta_b,
                            f.sup_bound() if M is None else M,
                            delta_b.sup_bound() if eps_b is None else eps_b)
    return PlantModel(ChainStructure(n), b, b_lower, pert)


def plant_rhs(model: PlantModel, t: float, x, u: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise DimensionMismatch(f"state has shape {x.shape}, plant order is {model.n}")
    dx = np.empty_like(x)
    dx[:-1] = x[1:]
    p = model.perturbation
    dx[-1] = model.b(t) * (1.0 + p.delta_b(t)) * u + p.f(t)
    return dx
