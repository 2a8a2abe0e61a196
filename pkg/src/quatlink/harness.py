"""Seeded Monte Carlo experiments: SISO equalization and 2x2 MIMO separation.

Every run draws its own channel, symbol stream, and noise from generators
keyed by (master seed, run index, purpose, stream index), so the full result
set is a pure function of the configuration and runs can be chunked across
processes without changing a single bit of the output.  Runs advance in
lockstep through the batched QLMS kernel, which keeps ensemble averaging over
hundreds of runs cheap.

Learning curves are the per-run error traces converted to dB (floored at
-100 dB relative to the reference power) and averaged pointwise across the
runs that stayed sane; diverged runs are excluded from every average but
counted and reported.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import modem, quat, wiener
from .adaptive import lag_matrix, run_qlms_batch
from .channel import (
    MimoChannelModel,
    SYMBOL_ENERGY,
    apply_mimo,
    derive_rng,
    expected_output_power,
    gaussian_quaternions,
    convolve,
    noise_variance_for_snr,
    random_channel_taps,
    random_mimo_grid,
)
from .errors import ExperimentFailedError
from .linalg import dot_left

MODE_SISO = "siso"
MODE_MIMO = "mimo"
SNR_REF_RECEIVER = "receiver"
SNR_REF_TRANSMITTER = "transmitter"

# rng purpose codes inside the per-run seed key
_PURPOSE_CHANNEL = 0
_PURPOSE_SYMBOLS = 1
_PURPOSE_NOISE = 2

# MIMO streams are scaled to unit power (norm_sq = 1 per symbol)
MIMO_STREAM_SCALE = 0.5

# dB floor for per-sample trace entries, relative to the reference power
CURVE_DB_FLOOR = -100.0

# runs per kernel batch; fixed so results do not depend on the worker count
_CHUNK_RUNS = 64

# trailing moving-average window used when locating the convergence iteration
SMOOTHING_WINDOW = 50


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment parameterization; defaults reproduce the SISO study."""

    mode: str = MODE_SISO
    num_channel_taps: int = 4
    equalizer_length: int = 15
    snr_db: float = 20.0
    snr_reference_point: str = SNR_REF_RECEIVER
    num_runs: int = 200
    symbols_per_run: int = 5000
    step_size: float = 0.01
    delay: int = 7
    master_seed: int = 0
    normalize_channel: bool = True
    mimo_tx: int = 2
    mimo_rx: int = 2

    def validate(self) -> None:
        """Raise ValueError naming the offending field on any bad value."""
        if self.mode not in (MODE_SISO, MODE_MIMO):
            raise ValueError(f"mode: must be '{MODE_SISO}' or '{MODE_MIMO}', got {self.mode!r}")
        if self.snr_reference_point not in (SNR_REF_RECEIVER, SNR_REF_TRANSMITTER):
            raise ValueError(
                f"snr_reference_point: must be '{SNR_REF_RECEIVER}' or '{SNR_REF_TRANSMITTER}',"
                f" got {self.snr_reference_point!r}"
            )
        for name in ("num_channel_taps", "equalizer_length", "num_runs", "symbols_per_run", "mimo_tx", "mimo_rx"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name}: must be at least 1, got {getattr(self, name)}")
        if not self.step_size > 0.0:
            raise ValueError(f"step_size: must be positive, got {self.step_size}")
        if np.isnan(self.snr_db):
            raise ValueError("snr_db: must not be NaN")
        if self.delay < 0 or self.delay >= self.symbols_per_run:
            raise ValueError(f"delay: must satisfy 0 <= delay < symbols_per_run, got {self.delay}")


@dataclass(frozen=True)
class LearningCurve:
    """Ensemble-averaged squared-error trace in normalized dB.

    mse_per_iteration drops the warm-up prefix, so entry 0 is the first
    adapted iteration; steady_state_db is the mean over the final 10% of
    entries.
    """

    mse_per_iteration: np.ndarray
    steady_state_db: float
    runs_diverged: int


@dataclass(frozen=True)
class SisoExperimentResult:
    curve: LearningCurve
    wiener_mse_db: float
    symbol_error_rate: float
    runs_diverged: int
    per_run_qlms_db: np.ndarray
    per_run_wiener_db: np.ndarray
    per_run_traces: np.ndarray  # (runs, N) linear, NaN in warm-up / after divergence


@dataclass(frozen=True)
class MimoExperimentResult:
    curves: tuple[LearningCurve, ...]
    symbol_error_rates: tuple[float, ...]
    runs_diverged: int
    per_run_traces: np.ndarray  # (runs, streams, N) linear


@dataclass(frozen=True)
class ExperimentSummary:
    steady_state_db: float
    convergence_iteration: int
    symbol_error_rate: float
    wiener_mse_db: Optional[float]
    runs_diverged: int


def _reference_power(config: ExperimentConfig) -> float:
    scale = MIMO_STREAM_SCALE if config.mode == MODE_MIMO else 1.0
    return SYMBOL_ENERGY * scale * scale


def _db_traces(traces: np.ndarray, reference_power: float) -> np.ndarray:
    """Per-run traces in dB relative to the reference power, floored."""
    floor = reference_power * 10.0 ** (CURVE_DB_FLOOR / 10.0)
    return 10.0 * np.log10(np.maximum(traces, floor) / reference_power)


def _steady_state_db(curve_db: np.ndarray) -> float:
    tail = max(1, curve_db.shape[0] // 10)
    return float(curve_db[-tail:].mean())


def _build_curve(traces: np.ndarray, alive: np.ndarray, delay: int, reference_power: float,
                 diverged: int) -> LearningCurve:
    if not alive.any():
        raise ExperimentFailedError(f"all {alive.size} runs diverged")
    curve_db = _db_traces(traces[alive][:, delay:], reference_power).mean(axis=0)
    return LearningCurve(curve_db, _steady_state_db(curve_db), diverged)


def _ser_from_final_weights(weights: np.ndarray, received, sent_indices: np.ndarray,
                            length: int, delay: int) -> tuple[int, int]:
    """Hard-decision symbol errors over the last half of a run."""
    n = sent_indices.shape[0]
    regressors = lag_matrix(received, length)[n // 2 :]
    decided = modem.hard_decisions(dot_left(weights[None, :, :], regressors))
    sent = sent_indices[n // 2 - delay : n - delay]
    errors, _ = modem.count_errors(sent, decided)
    return errors, decided.shape[0]


def _siso_run_data(config: ExperimentConfig, run: int):
    taps = random_channel_taps(
        derive_rng(config.master_seed, run, _PURPOSE_CHANNEL, 0),
        config.num_channel_taps,
        config.normalize_channel,
    )
    indices = derive_rng(config.master_seed, run, _PURPOSE_SYMBOLS, 0).integers(
        0, modem.NUM_SYMBOLS, config.symbols_per_run
    )
    reference = modem.index_to_symbol(indices)
    clean = convolve(reference, taps)
    if config.snr_reference_point == SNR_REF_RECEIVER:
        signal_power = expected_output_power(taps)
    else:
        signal_power = SYMBOL_ENERGY
    variance = noise_variance_for_snr(signal_power, config.snr_db)
    received = clean + gaussian_quaternions(
        derive_rng(config.master_seed, run, _PURPOSE_NOISE, 0), variance, clean.shape[:-1]
    )
    return received, reference, indices


def _siso_chunk(config: ExperimentConfig, start: int, stop: int) -> dict:
    runs = range(start, stop)
    data = [_siso_run_data(config, r) for r in runs]
    received = np.stack([d[0] for d in data])[:, None]
    references = np.stack([d[1] for d in data])
    batch = run_qlms_batch(received, references, config.equalizer_length, config.step_size, config.delay)

    n = config.symbols_per_run
    reference_power = _reference_power(config)
    qlms_db = np.full(len(data), np.nan)
    wiener_db = np.full(len(data), np.nan)
    errors = np.zeros(len(data), dtype=np.int64)
    decisions = np.zeros(len(data), dtype=np.int64)
    for i, (rx, ref, indices) in enumerate(data):
        if batch.diverged_at[i] >= 0:
            continue
        qlms_db[i] = 10.0 * np.log10(np.nanmean(batch.traces[i, 3 * n // 4 :]) / reference_power)
        problem = wiener.estimate_statistics(rx, ref, config.equalizer_length, config.delay)
        optimal = wiener.solve_wiener(problem)
        wiener_db[i] = wiener.evaluate_mse(optimal, rx, ref, config.equalizer_length, config.delay).db
        errors[i], decisions[i] = _ser_from_final_weights(
            batch.weights[i], rx, indices, config.equalizer_length, config.delay
        )
    return {
        "traces": batch.traces,
        "diverged_at": batch.diverged_at,
        "qlms_db": qlms_db,
        "wiener_db": wiener_db,
        "errors": errors,
        "decisions": decisions,
    }


def _mimo_run_data(config: ExperimentConfig, run: int):
    grid = random_mimo_grid(
        derive_rng(config.master_seed, run, _PURPOSE_CHANNEL, 0),
        config.mimo_rx,
        config.mimo_tx,
        config.num_channel_taps,
        config.normalize_channel,
    )
    indices = np.stack(
        [
            derive_rng(config.master_seed, run, _PURPOSE_SYMBOLS, s).integers(
                0, modem.NUM_SYMBOLS, config.symbols_per_run
            )
            for s in range(config.mimo_tx)
        ]
    )
    streams = MIMO_STREAM_SCALE * modem.index_to_symbol(indices)
    stream_power = _reference_power(config)
    if config.snr_reference_point == SNR_REF_RECEIVER:
        signal_power = stream_power * float(quat.norm_sq(grid).sum()) / config.mimo_rx
    else:
        signal_power = stream_power
    variance = noise_variance_for_snr(signal_power, config.snr_db)
    model = MimoChannelModel(grid, variance)
    received = apply_mimo(model, streams, derive_rng(config.master_seed, run, _PURPOSE_NOISE, 0))
    return received, streams, indices


def _mimo_chunk(config: ExperimentConfig, start: int, stop: int) -> dict:
    runs = range(start, stop)
    data = [_mimo_run_data(config, r) for r in runs]
    num_streams = config.mimo_tx
    # one lane per (run, stream): identical received streams, per-stream reference
    lanes_rx = np.stack([d[0] for d in data for _ in range(num_streams)])
    lanes_ref = np.stack([d[1][s] for d in data for s in range(num_streams)])
    batch = run_qlms_batch(lanes_rx, lanes_ref, config.equalizer_length, config.step_size, config.delay)

    traces = batch.traces.reshape(len(data), num_streams, config.symbols_per_run)
    diverged_at = batch.diverged_at.reshape(len(data), num_streams)
    errors = np.zeros((len(data), num_streams), dtype=np.int64)
    decisions = np.zeros((len(data), num_streams), dtype=np.int64)
    for i, (rx, _, indices) in enumerate(data):
        for s in range(num_streams):
            if diverged_at[i, s] >= 0:
                continue
            lane = i * num_streams + s
            errors[i, s], decisions[i, s] = _ser_from_final_weights(
                batch.weights[lane], rx, indices[s], config.equalizer_length, config.delay
            )
    return {"traces": traces, "diverged_at": diverged_at, "errors": errors, "decisions": decisions}


def _run_chunks(chunk_fn, config: ExperimentConfig, workers: int) -> list[dict]:
    bounds = [(start, min(start + _CHUNK_RUNS, config.num_runs)) for start in range(0, config.num_runs, _CHUNK_RUNS)]
    if workers <= 1 or len(bounds) == 1:
        return [chunk_fn(config, start, stop) for start, stop in bounds]
    max_workers = min(workers, len(bounds), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(chunk_fn, config, start, stop) for start, stop in bounds]
        return [f.result() for f in futures]


def run_siso_experiment(config: ExperimentConfig, workers: int = 1) -> SisoExperimentResult:
    """Monte Carlo SISO equalization: averaged learning curve, block Wiener
    baseline on the same data, and hard-decision SER from the final weights.
    """
    config.validate()
    if config.mode != MODE_SISO:
        raise ValueError(f"mode: expected '{MODE_SISO}', got {config.mode!r}")
    chunks = _run_chunks(_siso_chunk, config, workers)

    traces = np.concatenate([c["traces"] for c in chunks])
    diverged_at = np.concatenate([c["diverged_at"] for c in chunks])
    alive = diverged_at < 0
    diverged = int((~alive).sum())
    curve = _build_curve(traces, alive, config.delay, _reference_power(config), diverged)

    wiener_db = np.concatenate([c["wiener_db"] for c in chunks])
    qlms_db = np.concatenate([c["qlms_db"] for c in chunks])
    errors = int(np.concatenate([c["errors"] for c in chunks]).sum())
    decisions = int(np.concatenate([c["decisions"] for c in chunks]).sum())
    wiener_linear = (10.0 ** (wiener_db[alive] / 10.0)).mean()
    return SisoExperimentResult(
        curve=curve,
        wiener_mse_db=float(10.0 * np.log10(wiener_linear)),
        symbol_error_rate=errors / decisions if decisions else float("nan"),
        runs_diverged=diverged,
        per_run_qlms_db=qlms_db,
        per_run_wiener_db=wiener_db,
        per_run_traces=traces,
    )


def run_mimo_experiment(config: ExperimentConfig, workers: int = 1) -> MimoExperimentResult:
    """Monte Carlo 2x2 (generally rx-by-tx) MIMO separation and equalization.

    Each transmitted stream gets its own stacked-regressor equalizer spanning
    all receive streams (weight length mimo_rx * equalizer_length); curves and
    SER are reported per transmitted stream.
    """
    config.validate()
    if config.mode != MODE_MIMO:
        raise ValueError(f"mode: expected '{MODE_MIMO}', got {config.mode!r}")
    chunks = _run_chunks(_mimo_chunk, config, workers)

    traces = np.concatenate([c["traces"] for c in chunks])  # (runs, streams, N)
    diverged_at = np.concatenate([c["diverged_at"] for c in chunks])
    errors = np.concatenate([c["errors"] for c in chunks])
    decisions = np.concatenate([c["decisions"] for c in chunks])
    reference_power = _reference_power(config)

    curves = []
    rates = []
    for s in range(config.mimo_tx):
        alive = diverged_at[:, s] < 0
        curves.append(
            _build_curve(traces[:, s], alive, config.delay, reference_power, int((~alive).sum()))
        )
        total = int(decisions[alive, s].sum())
        rates.append(int(errors[alive, s].sum()) / total if total else float("nan"))
    return MimoExperimentResult(
        curves=tuple(curves),
        symbol_error_rates=tuple(rates),
        runs_diverged=int((diverged_at >= 0).any(axis=1).sum()),
        per_run_traces=traces,
    )


def run_experiment(config: ExperimentConfig, workers: int = 1):
    return run_siso_experiment(config, workers) if config.mode == MODE_SISO else run_mimo_experiment(config, workers)


def convergence_iteration(curve_db: np.ndarray, steady_state_db: float, threshold_db: float = 1.0) -> int:
    """First index where the trailing-mean smoothed curve comes within
    `threshold_db` of the steady state; the curve length minus one if the
    smoothed curve never quite gets there.
    """
    curve_db = np.asarray(curve_db, dtype=np.float64)
    if curve_db.size == 0:
        raise ValueError("cannot locate convergence on an empty curve")
    window = min(SMOOTHING_WINDOW, curve_db.size)
    sums = np.cumsum(curve_db)
    smoothed = np.empty_like(curve_db)
    smoothed[:window] = sums[:window] / np.arange(1, window + 1)
    smoothed[window:] = (sums[window:] - sums[:-window]) / window
    hits = np.nonzero(smoothed <= steady_state_db + threshold_db)[0]
    return int(hits[0]) if hits.size else curve_db.size - 1


def summarize(result):
    """Condense an experiment result into flat summary records.

    A SISO result yields one ExperimentSummary; a MIMO result yields a tuple
    with one entry per transmitted stream.
    """
    if isinstance(result, SisoExperimentResult):
        curve = result.curve
        return ExperimentSummary(
            steady_state_db=curve.steady_state_db,
            convergence_iteration=convergence_iteration(curve.mse_per_iteration, curve.steady_state_db),
            symbol_error_rate=result.symbol_error_rate,
            wiener_mse_db=result.wiener_mse_db,
            runs_diverged=result.runs_diverged,
        )
    if isinstance(result, MimoExperimentResult):
        if not result.curves:
            raise ValueError("cannot summarize an experiment with no streams")
        return tuple(
            ExperimentSummary(
                steady_state_db=curve.steady_state_db,
                convergence_iteration=convergence_iteration(curve.mse_per_iteration, curve.steady_state_db),
                symbol_error_rate=rate,
                wiener_mse_db=None,
                runs_diverged=curve.runs_diverged,
            )
            for curve, rate in zip(result.curves, result.symbol_error_rates)
        )
    raise ValueError(f"cannot summarize object of type {type(result).__name__}")
