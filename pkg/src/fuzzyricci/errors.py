"""Exception types shared across the package."""

from __future__ import annotations


class FuzzyRicciError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(FuzzyRicciError):
    """An operation received a malformed value (wrong shape, not Hermitian, ...)."""


class InvalidParams(FuzzyRicciError):
    """Torus or run parameters violate their constraints."""


class SpectrumOutOfDomain(FuzzyRicciError):
    """A scalar function was applied to a matrix with spectrum outside its domain."""

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class MetricDegenerate(FuzzyRicciError):
    """A metric has an eigenvalue at or below the positivity floor."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class PositivityLost(FuzzyRicciError):
    """An accepted integrator step produced a non-positive metric.

    The exact flow preserves positivity, so this signals an integrator
    failure; rerun with tighter tolerances.
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class StepUnderflow(FuzzyRicciError):
    """Adaptive step size fell below the configured minimum."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class InsufficientData(FuzzyRicciError):
    """Not enough samples for the requested computation."""
