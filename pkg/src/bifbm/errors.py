"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class BifbmError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(BifbmError, ValueError):
    """A parameter lies outside its admissible range."""


class GridError(BifbmError, ValueError):
    """A time grid is empty, unsorted, negative or has duplicates."""


class NumericError(BifbmError, ArithmeticError):
    """A numerical routine produced or received non-finite values."""


class ConvergenceError(NumericError):
    """Adaptive quadrature did not reach the requested tolerance."""


class NotPSDError(NumericError):
    """Factorization failed for every jitter level.

    ``min_eigenvalue`` carries the smallest eigenvalue of the original
    matrix as a diagnostic.
    """

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
