"""Exception hierarchy. Invalid arguments also subclass ``ValueError``."""


class BehinvError(Exception):
    """Base class for all package errors."""


class PreconditionError(BehinvError, ValueError):
    """An argument violates a documented precondition (shape, length, ...)."""


class UnsupportedSystemError(PreconditionError):
    """The system has more inputs than outputs, so no left inverse exists."""


class NotObservableError(PreconditionError):
    pass


class NoInverseError(PreconditionError):
    """The rank condition for an L-delay inverse fails at the requested L."""


class PEGenerationError(BehinvError):
    pass


class NumericalError(BehinvError):
    """Base for failures detected during a numerical solve."""


class InconsistentTrajectoryError(NumericalError):
    """The supplied windows are not a trajectory of the data-generating system.

    ``k`` is the time index of the failing step when raised from a stepper.
    """

    def __init__(self, message, residual=None, tolerance=None, k=None):
        super().__init__(message)
        self.residual = residual
        self.tolerance = tolerance
        self.k = k


class InfeasibleHistoryError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, primal_residual=None, dual_residual=None, iterations=None):
        super().__init__(message)
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual
        self.iterations = iterations
