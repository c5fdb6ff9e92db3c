"""Shared exception types for input validation and numerical failures."""


class ValidationError(ValueError):
    """Raised when an input violates a documented contract."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine misses its target accuracy.

    Carries the best residual reached so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
