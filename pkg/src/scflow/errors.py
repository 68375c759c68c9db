"""Exception hierarchy shared by all scflow modules."""


class ScflowError(Exception):
    """Base class for every error raised by scflow."""


class DomainError(ScflowError, ValueError):
    """An argument lies outside the domain of an operation."""


class CapabilityError(ScflowError):
    """A functional lacks a derivative that the caller needs."""


class IntegrationError(ScflowError):
    """The flow integrator could not resolve the dynamics (step-size underflow)."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class DivergenceError(IntegrationError):
    """The level-0 norm of the state crossed the configured ceiling."""


class BlowUpError(ScflowError):
    """A closed-form solution has a pole inside the requested time span."""

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class EstimationError(ScflowError):
    """No admissible samples were available for a constant estimate."""


class FitError(ScflowError):
    """A decay fit window contains too few samples."""


class PreconditionError(ScflowError):
    """Numerical preconditions of a check could not be certified."""
