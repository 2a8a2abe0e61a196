"""Block Wiener solution from sample statistics.

Expectations are replaced by sample averages over one block: the regressor
autocorrelation matrix R = avg x[n] x[n]^H and the cross-correlation
p = avg x[n] conj(r[n-d]).  Setting the sampled gradient to zero gives
R w* = p, so the optimal weights are w = conj(solve(R, p)); the conjugation
is applied HERE, because the normal equations determine the conjugate of the
weight vector and forgetting to undo that is the classic mistake.
"""

from dataclasses import dataclass

import numpy as np

from . import quat
from .adaptive import lag_matrix
from .errors import InsufficientDataError, SingularMatrixError
from .linalg import dot_left, identity, mean_outer_h, solve

DB_FLOOR = -100.0


@dataclass(frozen=True)
class WienerProblem:
    """Sample autocorrelation (L, L, 4), cross-correlation (L, 4), sample count."""

    autocorrelation: np.ndarray
    cross_correlation: np.ndarray
    sample_count: int

    def __post_init__(self):
        r = quat._q(self.autocorrelation)
        p = quat._q(self.cross_correlation)
        if r.ndim != 3 or r.shape[0] != r.shape[1] or p.shape != (r.shape[0], 4):
            raise ValueError(f"inconsistent dimensions: R {r.shape}, p {p.shape}")
        hermitian_gap = np.abs(r - quat.conj(r.swapaxes(0, 1))).max()
        if hermitian_gap > 1e-12 * max(1.0, float(np.abs(r).max())):
            raise ValueError(f"autocorrelation is not Hermitian (max deviation {hermitian_gap:.3e})")

    @property
    def length(self) -> int:
        return self.autocorrelation.shape[0]


@dataclass(frozen=True)
class MseReport:
    """Mean squared error, raw and in dB relative to the reference power."""

    linear: float
    db: float
    sample_count: int
    reference_power: float


def _windows(signal, reference, length: int, delay: int):
    """Regressors and delayed references for every iteration with a valid reference."""
    signal, reference = quat._q(signal), quat._q(reference)
    n = signal.shape[-2]
    if reference.ndim != 2 or reference.shape[0] != n:
        raise ValueError(f"reference must match the signal length {n}, got shape {reference.shape}")
    if delay < 0:
        raise ValueError("delay must be nonnegative")
    if n - delay < 1:
        raise InsufficientDataError(f"no iteration has a valid delayed reference (N={n}, delay={delay})")
    return lag_matrix(signal, length)[delay:], reference[: n - delay]


def estimate_statistics(signal, reference, length: int, delay: int = 0) -> WienerProblem:
    """Sample R and p over the block; counts only iterations with a delayed reference.

    `signal` is (N, 4), or (C, N, 4) for stacked multi-stream regressors
    (the estimate then has length C*length).
    """
    regressors, refs = _windows(signal, reference, length, delay)
    autocorrelation = mean_outer_h(regressors)
    cross_correlation = quat.mul(regressors, quat.conj(refs)[:, None, :]).mean(axis=0)
    return WienerProblem(autocorrelation, cross_correlation, regressors.shape[0])


def default_ridge(problem: WienerProblem) -> float:
    """1e-8 of the mean diagonal power; sample R can be rank-deficient for short blocks."""
    diag = problem.autocorrelation[np.arange(problem.length), np.arange(problem.length), 0]
    return 1e-8 * float(diag.sum()) / problem.length


def solve_wiener(problem: WienerProblem, ridge: float | None = None) -> np.ndarray:
    """Optimal weights conj((R + ridge*I)^-1 p).

    `ridge` defaults to `default_ridge(problem)`; pass 0.0 for the exact
    normal equations.
    """
    if ridge is None:
        ridge = default_ridge(problem)
    if ridge < 0.0:
        raise ValueError("ridge must be nonnegative")
    regularized = problem.autocorrelation + ridge * identity(problem.length)
    try:
        conjugate_weights = solve(regularized, problem.cross_correlation)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"sample autocorrelation is singular ({exc}); retry with a positive ridge"
        ) from exc
    return quat.conj(conjugate_weights)


def evaluate_mse(weights, signal, reference, length: int, delay: int = 0) -> MseReport:
    """Empirical mean of norm_sq(r[n-d] - dot_left(w, x[n])) over the block.

    The dB figure is normalized by the mean reference power and floored at
    -100 dB so a perfect fit stays finite.
    """
    regressors, refs = _windows(signal, reference, length, delay)
    weights = quat._q(weights)
    errors = refs - dot_left(weights[None, :, :], regressors)
    linear = float(quat.norm_sq(errors).mean())
    reference_power = float(quat.norm_sq(refs).mean())
    if linear <= 0.0 or reference_power <= 0.0:
        db = DB_FLOOR
    else:
        db = max(10.0 * np.log10(linear / reference_power), DB_FLOOR)
    return MseReport(linear, float(db), regressors.shape[0], reference_power)
