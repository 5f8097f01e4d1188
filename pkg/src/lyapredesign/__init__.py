"""Adaptive barrier-function Lyapunov redesign for perturbed integrator chains."""

from .analysis import (
    BoundReport,
    ScaledSystem,
    bound_report,
    epsilon_for_radius,
    inverse_time_scaling,
    prescribed_radius,
    prop1_bounds,
    prop2_reach_time,
    scaled_consistency_check,
    sigma1,
    time_scaling,
)
from .controller import (
    ControllerParams,
    ControllerState,
    ControlOutput,
    Mode,
    barrier_gain,
    combined_control,
    gamma_dot,
    kappa,
    lyapunov,
    nominal_control,
    omega_inv_apply,
    redesigned_control,
    u0,
)
from .errors import (
    LyapRedesignError,
    ConfigError,
    DimensionMismatch,
    NotSymmetric,
    UndefinedForFirstOrder,
    InvalidTarget,
    InsufficientSamples,
    Uncontrollable,
    NumericalError,
    NoStabilizingSolution,
    NonConvergence,
    Divergence,
    ControllerInvariantError,
    SingularityReached,
    BarrierViolated,
)
from .plant import (
    Constant,
    PerturbationSpec,
    PlantModel,
    SampledTable,
    SignOfSinusoid,
    Sinusoid,
    Sum,
    chain_plant,
    eval_signal,
    plant_rhs,
    signal_from_dict,
)
from .riccati import (
    AreProblem,
    AreSolution,
    ChainStructure,
    alpha_bound,
    solve_are,
    solve_chain_are,
    spectral_bounds,
)
from .sim import SimConfig, Trace, read_trace, simulate, simulate_feedback, step, write_trace

__version__ = "0.1.0"
