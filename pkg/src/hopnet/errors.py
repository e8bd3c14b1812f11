"""Exception hierarchy: one class per failure category used across modules."""


class HopnetError(Exception):
    """Base class for all package errors."""


class ParameterError(HopnetError, ValueError):
    """Invalid argument value (non-positive intensity, degenerate window, ...)."""


class DomainError(HopnetError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SolverError(HopnetError, RuntimeError):
    """Linear solve failed to converge; carries the residual report."""


class SearchError(HopnetError, RuntimeError):
    """Bisection could not bracket the target within the expansion limit."""


class SizeError(HopnetError, ValueError):
    """Instance too large for an exhaustive routine."""


class StatisticsError(HopnetError, ValueError):
    """Not enough data for the requested estimate."""
