"""Exception and warning classes shared across the package."""


class DistOrderError(Exception):
    """Base class for all package errors."""


class DomainError(DistOrderError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(DistOrderError):
    """A numerical approximation could not reach its accuracy target.

    Attributes
    ----------
    estimate : float
        The error (or tail) estimate that triggered the failure.
    """

    def __init__(self, message, estimate=float("nan")):
        super().__init__(message)
        self.estimate = estimate


class SolverError(DistOrderError):
    """An iterative solver failed to converge or could not be set up."""


class RangeError(DistOrderError, ValueError):
    """A target value is outside the attainable range of a monotone map."""

    def __init__(self, message, interval=None, index=None):
        super().__init__(message)
        self.interval = interval
        self.index = index


class ExcitationError(DistOrderError):
    """The Laplace transform of the boundary input vanishes at a sample point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConditioningError(DistOrderError):
    """A linear system is numerically singular."""


class AccuracyWarning(UserWarning):
    """Emitted when a result is returned but its error estimate is large."""
