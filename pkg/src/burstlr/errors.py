"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BurstLrError(Exception):
    """Base class for all package errors."""


class DomainError(BurstLrError):
    """Parameter vector lies outside the family's open parameter domain."""


class SupportError(BurstLrError):
    """Observation lies outside the family's support."""


class DegenerateDataError(BurstLrError):
    """Data for which the MLE sits on (or escapes to) the domain boundary."""


class ConvergenceError(BurstLrError):
    """Iterative solver exhausted its budget; carries the last iterate."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class InvariantViolationError(BurstLrError):
    """A structural invariant failed (e.g. a likelihood ratio above 1)."""


class SingularWindowError(BurstLrError):
    """A window's total observation count is zero; its correlation row is undefined."""


class NumericalError(BurstLrError):
    """Linear-algebra failure that survived the jitter/retry policy."""


class CalibrationError(BurstLrError):
    """Requested significance level is unreachable within the search bracket."""
