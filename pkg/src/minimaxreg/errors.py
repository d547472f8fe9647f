"""Exception types shared across the package."""

from __future__ import annotations


class MinimaxRegError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(MinimaxRegError):
    """Array shapes do not line up (design rows vs responses vs parameters)."""


class EmptyGroupError(MinimaxRegError):
    """A grouping contains a level with no observations."""


class TrueParametersUnknownError(MinimaxRegError):
    """An error-statistic operation was invoked on a dataset without true parameters."""


class SingularDesignError(MinimaxRegError):
    """Level matrix (or design) is numerically singular.

    Carries the offending determinant when available.
    """

    def __init__(self, message: str, det: float | None = None):
        super().__init__(message)
        self.det = det


class WrongShapeError(MinimaxRegError):
    """Operation requires a specific design shape (e.g. k = q) that does not hold."""


class RankDeficientError(MinimaxRegError):
    """Design matrix does not have full column rank."""


class DualityGapError(MinimaxRegError):
    """Primal and dual objective values disagree beyond tolerance (solver bug signal)."""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class InvalidModelError(MinimaxRegError):
    """Error-distribution family or parameters are invalid/unsupported."""


class InfiniteVarianceError(MinimaxRegError):
    """Requested a covariance comparison for an attraction law without finite variance."""


class ExperimentError(MinimaxRegError):
    """Monte Carlo experiment configuration or execution failure."""


class ExperimentFailureRateError(ExperimentError):
    """Per-replication fit failures exceeded the acceptable rate."""

    def __init__(self, message: str, failures: int, total: int):
        super().__init__(message)
        self.failures = failures
        self.total = total


class SolverStatusError(MinimaxRegError):
    """LP solve terminated with a non-optimal status."""

    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status


class EmptySampleError(MinimaxRegError):
    """A statistic was requested for an empty sample."""
