"""Quaternion-valued link simulation toolkit.

Quaternion arithmetic and linear algebra, a 16-point 4-D QAM modem,
quaternion FIR channels with calibrated noise, a QLMS adaptive equalizer,
the block Wiener solution, and a seeded Monte Carlo harness with a CLI.
"""

__version__ = "0.1.0"

from . import adaptive, channel, cli, harness, linalg, modem, quat, wiener
from .adaptive import EqualizerState, QlmsBatch, run_qlms, run_qlms_batch
from .channel import ChannelModel, MimoChannelModel, derive_rng, make_rng
from .errors import (
    DimensionMismatchError,
    DivergenceError,
    ExperimentFailedError,
    InsufficientDataError,
    SingularMatrixError,
)
from .harness import (
    ExperimentConfig,
    ExperimentSummary,
    LearningCurve,
    MimoExperimentResult,
    SisoExperimentResult,
    run_mimo_experiment,
    run_siso_experiment,
    summarize,
)
from .wiener import MseReport, WienerProblem, estimate_statistics, evaluate_mse, solve_wiener

__all__ = [
    "__version__",
    "adaptive",
    "channel",
    "cli",
    "harness",
    "linalg",
    "modem",
    "quat",
    "wiener",
    "EqualizerState",
    "QlmsBatch",
    "run_qlms",
    "run_qlms_batch",
    "ChannelModel",
    "MimoChannelModel",
    "derive_rng",
    "make_rng",
    "DimensionMismatchError",
    "DivergenceError",
    "ExperimentFailedError",
    "InsufficientDataError",
    "SingularMatrixError",
    "ExperimentConfig",
    "ExperimentSummary",
    "LearningCurve",
    "MimoExperimentResult",
    "SisoExperimentResult",
    "run_mimo_experiment",
    "run_siso_experiment",
    "summarize",
    "MseReport",
    "WienerProblem",
    "estimate_statistics",
    "evaluate_mse",
    "solve_wiener",
]
