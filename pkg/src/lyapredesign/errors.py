"""Exception hierarchy shared by the solver, controller and simulator."""


class LyapRedesignError(Exception):
    """Base class for all package errors."""


class ConfigError(LyapRedesignError, ValueError):
    """Invalid configuration or parameter set."""


class DimensionMismatch(LyapRedesignError, ValueError):
    pass


class NotSymmetric(LyapRedesignError, ValueError):
    pass


class UndefinedForFirstOrder(LyapRedesignError, ValueError):
    pass


class InvalidTarget(LyapRedesignError, ValueError):
    pass


class InsufficientSamples(LyapRedesignError, ValueError):
    pass


class Uncontrollable(LyapRedesignError, ValueError):
    pass


class NumericalError(LyapRedesignError, ArithmeticError):
    """Numerical failure (Riccati solve, integration blow-up)."""


class NoStabilizingSolution(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class Divergence(NumericalError):
    """The integrated state became non-finite."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
        self.trace = None


class ControllerInvariantError(LyapRedesignError, RuntimeError):
    """A closed-loop invariant of the switching controller was broken.

    ``t`` is the failing sample time; the simulator attaches the trace
    prefix recorded up to (excluding) the failing sample as ``trace``.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
        self.trace = None


class SingularityReached(ControllerInvariantError):
    pass


class BarrierViolated(ControllerInvariantError):
    pass
