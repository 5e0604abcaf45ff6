"""Exception hierarchy for condgof."""

from __future__ import annotations


class CondGofError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CondGofError, ValueError):
    """A distribution parameter lies outside its domain."""


class DegenerateSampleError(CondGofError, ValueError):
    """The sample has t = sum(x) = 0, so the geometric fit is on the boundary."""


class MalformedInputError(CondGofError, ValueError):
    """Bar positions or a composition violate their invariants."""


class InfeasibleTotalError(CondGofError, ValueError):
    """The requested total cannot be reached under the given constraints."""


class SupportError(CondGofError, ValueError):
    """A power-series coefficient vanished at a reachable state."""


class UndefinedStatisticError(CondGofError, ArithmeticError):
    """A statistic has a zero denominator on this sample."""


class EstimationError(CondGofError, RuntimeError):
    """Maximum likelihood iteration failed to converge.

    ``best`` holds the best parameter iterate found and ``loglik`` its
    log-likelihood, so callers can still report something.
    """

    def __init__(self, message: str, best=None, loglik: float | None = None):
        super().__init__(message)
        self.best = best
        self.loglik = loglik


class ParseError(CondGofError, ValueError):
    """Input data could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
