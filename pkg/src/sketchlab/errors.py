"""Exception types shared across the package."""


class SketchlabError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SketchlabError, ValueError):
    """Raised on shape mismatches, empty inputs or out-of-range parameters."""


class NumericFailureError(SketchlabError, ArithmeticError):
    """Raised when an iterative or factorization step cannot produce a result.

    ``last_iterate`` carries whatever partial state was available (for
    example the final power-iteration vector) so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ConfigError(SketchlabError, ValueError):
    """Raised for unknown keys, type mismatches or missing required settings."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
