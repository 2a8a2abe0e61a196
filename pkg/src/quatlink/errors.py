"""Exception types shared across the package."""

__all__ = [
    "DimensionMismatchError",
    "SingularMatrixError",
    "InsufficientDataError",
    "DivergenceError",
    "ExperimentFailedError",
]


class DimensionMismatchError(ValueError):
    """Operands have incompatible lengths or shapes."""


class SingularMatrixError(ArithmeticError):
    """Linear system is singular or numerically singular."""


class InsufficientDataError(ValueError):
    """Not enough samples to form the requested statistic."""


class DivergenceError(RuntimeError):
    """Adaptive filter blew up.

    Carries the iteration index at which divergence was detected, the partial
    squared-error trace up to and including that iteration, and the weights at
    the time of detection.
    """

    def __init__(self, message: str, iteration: int, trace, weights):
        super().__init__(message)
        self.iteration = iteration
        self.trace = trace
        self.weights = weights


class ExperimentFailedError(RuntimeError):
    """Every Monte Carlo run of an experiment diverged."""
