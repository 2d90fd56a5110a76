"""Exception types raised by semitrans."""


class SemitransError(Exception):
    """Base class for all package errors."""


class DomainError(SemitransError, ValueError):
    """Non-finite or otherwise inadmissible argument."""


class RangeError(SemitransError, ValueError):
    """Value outside the range of a transformation, so it cannot be inverted."""


class EvaluationError(SemitransError, ArithmeticError):
    """A smoother could not be evaluated at a requested point."""


class EstimationError(SemitransError, RuntimeError):
    """Profile likelihood estimation failed.

    ``diagnostics`` maps each attempted theta to the failure message.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BootstrapError(SemitransError, RuntimeError):
    """Too many bootstrap replicates failed."""

    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = list(failures or [])
