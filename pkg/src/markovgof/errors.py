"""Exception hierarchy for markovgof."""

from __future__ import annotations

__all__ = [
    "MarkovGofError",
    "ConstraintViolation",
    "UnsupportedFamilyError",
    "EstimationError",
    "DegeneratePoolError",
    "BootstrapAbort",
    "NearUnitRootWarning",
]


class MarkovGofError(Exception):
    """Base class for all errors raised by this package."""


class ConstraintViolation(MarkovGofError, ValueError):
    """A parameter vector lies outside the admissible parameter space."""


class UnsupportedFamilyError(MarkovGofError, ValueError):
    """The requested operation is not defined for the model family."""


class EstimationError(MarkovGofError, ArithmeticError):
    """Parameter estimation failed (singular or ill-conditioned design)."""


class DegeneratePoolError(MarkovGofError, ValueError):
    """Residuals cannot be standardized into an innovation pool."""


class BootstrapAbort(MarkovGofError, RuntimeError):
    """Too many bootstrap resamples failed to refit."""


class NearUnitRootWarning(UserWarning):
    """AR estimate was shrunk towards zero to restore stationarity."""
