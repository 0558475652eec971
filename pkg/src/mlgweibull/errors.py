"""Exception hierarchy.

The CLI maps each family to its own exit status, so library code raises the
most specific class that applies.
"""


class MLGWeibullError(Exception):
    """Base class for all package errors."""


class ConfigError(MLGWeibullError, ValueError):
    """Invalid configuration or parameter values."""


class IngestError(MLGWeibullError, ValueError):
    """A data file could not be read into a valid dataset."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(MLGWeibullError, ArithmeticError):
    """A computation produced a non-finite or otherwise unusable value."""


class FactorizationError(NumericalError):
    """Cholesky factorization failed; ``pivot`` is the 0-based failing index."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot
