"""Application systems reduced to the perturbed-chain form.

* Torsional spring-damper tracking a quintic reference (n = 2).
* Linearized Furuta pendulum brought to controller form (n = 4), with the
  motor torque/voltage conversion and input saturation as the actuator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, Uncontrollable
from .plant import (
    Constant,
    PerturbationSpec,
    PlantModel,
    Polynomial,
    Scaled,
    Signal,
    SignOfSinusoid,
    Sinusoid,
    Sum,
)
from .riccati import ChainStructure

# ---------------------------------------------------------------- torsional


@dataclass(frozen=True)
class QuinticTrajectory:
    """Rest-to-rest quintic q(t) on [t0, tf]; held constant outside."""

    t0: float = 0.0
    tf: float = 10.0
    q0: float = 0.0
    qf: float = 10.0

    def __post_init__(self):
        if not self.tf > self.t0:
            raise ConfigError("quintic trajectory needs tf > t0")

    @cached_property
    def coefficients(self) -> np.ndarray:
        """c_k of q = sum c_k (t - t0)^k from the six boundary conditions."""
        h = self.tf - self.t0
        # rest at t0 fixes c0..c2; the end conditions fix c3..c5
        A = np.array([[h**3, h**4, h**5],
                      [3 * h**2, 4 * h**3, 5 * h**4],
                      [6 * h, 12 * h**2, 20 * h**3]])
        c_hi = np.linalg.solve(A, [self.qf - self.q0, 0.0, 0.0])
        return np.concatenate(([self.q0, 0.0, 0.0], c_hi))

    @cached_property
    def signals(self):
        """(position, velocity, acceleration) as Polynomial signals."""
        c = self.coefficients
        d1 = np.polynomial.polynomial.polyder(c)
        d2 = np.polynomial.polynomial.polyder(c, 2)
        return (Polynomial(tuple(c), self.t0, self.tf),
                _Windowed(Polynomial(tuple(d1), self.t0, self.tf), self.t0, self.tf),
                _Windowed(Polynomial(tuple(d2), self.t0, self.tf), self.t0, self.tf))


@dataclass(frozen=True)
class _Windowed(Signal):
    """Zero outside [t0, tf]: derivatives of a position held constant there."""

    inner: Polynomial
    t0: float
    tf: float

    def __call__(self, t):
        return self.inner(t) if self.t0 <= t <= self.tf else 0.0

    def sup_bound(self):
        return self.inner.sup_bound()

    def to_dict(self):
        return {"type": "windowed", "inner": self.inner.to_dict()}


def quintic_eval(traj: QuinticTrajectory, t: float):
    pos, vel, acc = traj.signals
    return pos(t), vel(t), acc(t)


@dataclass(frozen=True)
class TorsionalParams:
    k: float = 2.3375
    j: float = 0.2946
    j_m: float = 0.0333
    b_damp: float = 0.012195
    delta_j: Signal = field(default_factory=lambda: SignOfSinusoid(0.75, 1.0))
    phi: Signal = field(default_factory=lambda: Sinusoid.cosine(1.0, 5.0))

    def __post_init__(self):
        if not self.j_m > 0.0:
            raise ConfigError("j_m must be positive")
        if self.delta_j.sup_bound() >= 1.0:
            raise ConfigError("sup |delta_j| must be below 1")


@dataclass(frozen=True)
class TorsionalModel:
    """Error-coordinate plant with the maps back to the physical input."""

    plant: PlantModel
    params: TorsionalParams
    trajectory: QuinticTrajectory

    def reference(self, t):
        return quintic_eval(self.trajectory, t)

    def physical_input(self, t, x, u) -> float:
        """v = u + k theta + b_damp theta_dot with theta = x1 + theta_d."""
        th_d, dth_d, _ = self.reference(t)
        return u + self.params.k * (x[0] + th_d) + self.params.b_damp * (x[1] + dth_d)

    def physical_rhs(self, t, q, v) -> np.ndarray:
        """Second-order model (theta, theta_dot) implied by the error dynamics."""
        p = self.params
        _, _, ddth_d = self.reference(t)
        theta, dtheta = q
        acc = ((1.0 + p.delta_j(t)) * (v - p.k * theta - p.b_damp * dtheta) / p.j_m
               + ddth_d + p.j * (ddth_d + p.phi(t)))
        return np.array([dtheta, acc])

    def to_error(self, t, q):
        th_d, dth_d, _ = self.reference(t)
        return np.array([q[0] - th_d, q[1] - dth_d])


def torsional_error_plant(params: TorsionalParams = TorsionalParams(),
                          traj: QuinticTrajectory = QuinticTrajectory()) -> TorsionalModel:
    """n = 2 chain with b = 1/j_m, delta_b = delta_j and f = j (theta_d'' + phi)."""
    _, _, acc = traj.signals
    f = Scaled(params.j, Sum((acc, params.phi)))
    pert = PerturbationSpec(f, params.delta_j, f.sup_bound(), params.delta_j.sup_bound())
    b = Constant(1.0 / params.j_m)
    plant = PlantModel(ChainStructure(2), b, 0.5 * b.value, pert)
    return TorsionalModel(plant, params, traj)


# ---------------------------------------------------------------- Furuta


@dataclass(frozen=True)
class MotorParams:
    eta_g: float = 1.0
    K_g: float = 70.0
    eta_m: float = 1.0
    k_t: float = 7.68e-3
    k_m: float = 7.68e-3
    R_m: float = 2.6

    @property
    def torque_per_volt(self):
        return self.eta_g * self.K_g * self.eta_m * self.k_t / self.R_m


@dataclass(frozen=True)
class FurutaParams:
    """Rotary pendulum constants.

    The mechanical and motor values are placeholders typical of a Quanser-class
    rotary pendulum; only tau_n and u_sat are scenario values.
    """

    m_p: float = 0.127
    L_p: float = 0.337
    L_r: float = 0.216
    J_p: float = 1.20e-3
    J_r: float = 9.98e-4
    g: float = 9.81
    motor: MotorParams = field(default_factory=MotorParams)
    tau_n: float = 0.1112
    u_sat: float = 10.0

    def __post_init__(self):
        for name in ("m_p", "L_p", "L_r", "J_p", "J_r", "tau_n", "u_sat"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.g < 0.0:
            raise ConfigError("g must be nonnegative")

    @property
    def J_T(self):
        return (self.J_p * self.m_p * self.L_r ** 2 + self.J_r * self.J_p
                + 0.25 * self.J_r * self.m_p * self.L_p ** 2)


@dataclass(frozen=True)
class LinearPlant:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1)
        if A.shape != (B.size, B.size):
            raise ConfigError(f"A is {A.shape} but B has {B.size} entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.B.size

    def controllability(self):
        cols = [self.B]
        for _ in range(self.n - 1):
            cols.append(self.A @ cols[-1])
        return np.column_stack(cols)


def furuta_linearize(params: FurutaParams = FurutaParams()) -> LinearPlant:
    """Upright linearization, state z = (theta_r, theta_p, theta_r', theta_p')."""
    p = params
    JT = p.J_T
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    A[2, 1] = 0.25 * p.m_p * p.L_p ** 2 * p.L_r * p.g / JT
    A[3, 1] = 0.5 * p.m_p * p.L_p * p.g * (p.J_r + p.m_p * p.L_r ** 2) / JT
    B = np.array([0.0, 0.0, p.J_p + 0.25 * p.m_p * p.L_p ** 2, 0.5 * p.m_p * p.L_p * p.L_r]) / JT
    return LinearPlant(A, B)


def hankel_from_charpoly(a) -> np.ndarray:
    """Upper anti-triangular Hankel matrix from char-poly coefficients.

    ``a`` holds (a_0, ..., a_{n-1}) of s^n + a_{n-1}s^{n-1} + ... + a_0;
    H[i, j] = a_{i+j+1} with a_n = 1 and zero below the anti-diagonal.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    ext = np.append(a, 1.0)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n - i):
            H[i, j] = ext[i + j + 1]
    return H


@dataclass(frozen=True)
class ControllerForm:
    """z = W x maps the chain-form coordinates x to the original ones z."""

    W: np.ndarray
    A_c: np.ndarray
    B_c: np.ndarray

    @property
    def last_row(self):
        return self.A_c[-1]

    def structural_residual(self) -> float:
        """Distance of (A_c, B_c) from companion form outside the coefficient row."""
        n = self.B_c.size
        target = np.eye(n, k=1)
        target[-1] = self.A_c[-1]
        e = np.zeros(n)
        e[-1] = 1.0
        return float(max(np.abs(self.A_c - target).max(), np.abs(self.B_c - e).max()))


def controller_form_transform(plant: LinearPlant, cond_limit: float = 1e12) -> ControllerForm:
    """W = [B AB ... A^{n-1}B] H so that W^{-1} A W is companion and W^{-1} B = e_n."""
    C = plant.controllability()
    if np.linalg.matrix_rank(C) < plant.n or np.linalg.cond(C) > cond_limit:
        raise Uncontrollable("controllability matrix is rank deficient")
    a = np.poly(plant.A)[::-1][:-1].real  # a_0 ... a_{n-1}
    W = C @ hankel_from_charpoly(a)
    A_c = np.linalg.solve(W, plant.A @ W)
    B_c = np.linalg.solve(W, plant.B)
    return ControllerForm(W, A_c, B_c)


def torque_voltage(params: FurutaParams, tau_desired, theta_r_dot, saturate=True) -> float:
    """Motor voltage producing tau_desired at arm speed theta_r_dot."""
    m = params.motor
    Vm = tau_desired / m.torque_per_volt + m.K_g * m.k_m * theta_r_dot
    if saturate:
        Vm = min(max(Vm, -params.u_sat), params.u_sat)
    return Vm


def voltage_torque(params: FurutaParams, Vm, theta_r_dot) -> float:
    m = params.motor
    return m.torque_per_volt * (Vm - m.K_g * m.k_m * theta_r_dot)


@dataclass(frozen=True)
class FurutaLoop:
    """Chain-form Furuta plant and the maps to physical quantities.

    Chain coordinates are x = s W^{-1} z with s = a42 / tau_n, so that the
    coefficient row of the companion form reads (0, 0, s tau_n, 0) and the
    pre-feedback tau = -tau_n x3 + u cancels it. The chain input is the
    torque u, entering with b = s.
    """

    params: FurutaParams
    linear: LinearPlant
    form: ControllerForm
    scale: float
    plant: PlantModel
    saturate: bool = True

    def to_chain(self, z):
        return self.scale * np.linalg.solve(self.form.W, np.asarray(z, dtype=float))

    def to_physical(self, x):
        return self.form.W @ np.asarray(x, dtype=float) / self.scale

    def torque(self, x, u):
        """Commanded torque tau = u - (coefficient row . x) / s."""
        return u - float(self.form.last_row @ x) / self.scale

    def voltage(self, x, u):
        z = self.to_physical(x)
        return torque_voltage(self.params, self.torque(x, u), z[2], saturate=self.saturate)


def furuta_closed_loop_plant(params: FurutaParams = FurutaParams(),
                             perturbation: PerturbationSpec = PerturbationSpec(),
                             saturate: bool = True) -> FurutaLoop:
    lin = furuta_linearize(params)
    form = controller_form_transform(lin)
    a42 = form.last_row[2]
    scale = a42 / params.tau_n if a42 > 0 else 1.0 / params.tau_n
    row = form.last_row.copy()

    def actuator(t, x, u):
        # commanded torque -> saturated voltage -> delivered torque, expressed as chain input
        z2 = float(form.W[2] @ x) / scale
        tau_cmd = u - float(row @ x) / scale
        Vm = torque_voltage(params, tau_cmd, z2, saturate=saturate)
        return voltage_torque(params, Vm, z2) + float(row @ x) / scale

    b = Constant(scale)
    # the pre-feedback removes the coefficient row, leaving the pure chain
    plant = PlantModel(ChainStructure(4), b, 0.5 * scale, perturbation, actuator)
    return FurutaLoop(params, lin, form, scale, plant, saturate)
