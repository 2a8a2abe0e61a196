"""Command-line front end.

`quatlink run` parses a configuration (flags override config-file values,
which override defaults), runs the experiment, and writes three files into
the output directory:

* ``learning_curve.csv`` (or ``learning_curve_streamK.csv`` per stream in
  MIMO mode): header ``iteration,mse_db``, one row per post-warm-up
  iteration.
* ``summary.txt``: flat ``key=value`` metrics followed by a config echo.
* ``manifest.txt``: artifact version, timestamp, output file names, and the
  same config echo.

The config echo uses exactly the config-file syntax, so an emitted summary
or manifest can be fed back through the same parser to recover the identical
configuration.  Identical configurations (including the master seed) produce
byte-identical CSV and summary files; only the manifest carries a timestamp.
"""

import argparse
import dataclasses
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ExperimentFailedError
from .harness import (
    ExperimentConfig,
    MODE_MIMO,
    MODE_SISO,
    MimoExperimentResult,
    SisoExperimentResult,
    run_experiment,
    summarize,
)

SEED_ENV_VAR = "QUATLINK_SEED"
DEFAULT_OUT_DIR = "quatlink_out"

_DEFAULTS = ExperimentConfig()

# config field -> CLI flag; also fixes the echo order
_FLAG_BY_FIELD = {
    "mode": "--mode",
    "num_channel_taps": "--taps",
    "equalizer_length": "--eq-len",
    "snr_db": "--snr-db",
    "snr_reference_point": "--snr-ref",
    "num_runs": "--runs",
    "symbols_per_run": "--symbols",
    "step_size": "--mu",
    "delay": "--delay",
    "master_seed": "--seed",
    "normalize_channel": "--normalize-channel",
    "mimo_tx": None,
    "mimo_rx": None,
}

_CONFIG_FIELDS = [f.name for f in dataclasses.fields(ExperimentConfig)]
_BOOL_FIELDS = {"normalize_channel"}
_INT_FIELDS = {"num_channel_taps", "equalizer_length", "num_runs", "symbols_per_run", "delay", "master_seed", "mimo_tx", "mimo_rx"}
_FLOAT_FIELDS = {"snr_db", "step_size"}


@dataclass(frozen=True)
class CliInvocation:
    config: ExperimentConfig
    out_dir: Path
    workers: int


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _parse_field(name: str, raw: str):
    raw = raw.strip()
    if name in _BOOL_FIELDS:
        if raw not in ("on", "off"):
            raise ValueError(f"{name}: expected 'on' or 'off', got {raw!r}")
        return raw == "on"
    if name in _INT_FIELDS:
        return int(raw)
    if name in _FLOAT_FIELDS:
        return float(raw)
    return raw


def config_to_lines(config: ExperimentConfig) -> list[str]:
    """Config echo: one key=value line per field, in declaration order."""
    return [f"{name}={_format_value(getattr(config, name))}" for name in _CONFIG_FIELDS]


def parse_kv_lines(text: str) -> dict[str, str]:
    """Parse flat key=value text; blank lines and '#' comments are skipped."""
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def config_values_from_mapping(mapping: dict[str, str], ignore_unknown: bool = False) -> dict:
    """Typed config fields found in a key=value mapping.

    With ignore_unknown=False any key that is not a config field is an error;
    with True extra keys (summary metrics, manifest metadata) are skipped.
    """
    values = {}
    unknown = []
    for key, raw in mapping.items():
        if key in _CONFIG_FIELDS:
            values[key] = _parse_field(key, raw)
        else:
            unknown.append(key)
    if unknown and not ignore_unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return values


def config_from_mapping(mapping: dict[str, str], ignore_unknown: bool = False) -> ExperimentConfig:
    return dataclasses.replace(_DEFAULTS, **config_values_from_mapping(mapping, ignore_unknown))


def build_parser() -> tuple[argparse.ArgumentParser, argparse.ArgumentParser]:
    parser = argparse.ArgumentParser(
        prog="quatlink",
        description="Quaternion-valued link simulations: adaptive equalization and MIMO separation.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    run = commands.add_parser("run", help="run an experiment and write CSV/summary/manifest files")
    d = _DEFAULTS
    run.add_argument("--mode", choices=(MODE_SISO, MODE_MIMO), help=f"experiment layout (default: {d.mode})")
    run.add_argument("--taps", type=int, metavar="N", help=f"channel tap count (default: {d.num_channel_taps})")
    run.add_argument("--eq-len", type=int, metavar="L", help=f"equalizer length (default: {d.equalizer_length})")
    run.add_argument("--snr-db", type=float, metavar="X", help=f"SNR in dB, 'inf' disables noise (default: {d.snr_db})")
    run.add_argument(
        "--snr-ref",
        choices=("receiver", "transmitter"),
        help=f"where the SNR is referenced (default: {d.snr_reference_point})",
    )
    run.add_argument("--runs", type=int, metavar="N", help=f"Monte Carlo runs (default: {d.num_runs})")
    run.add_argument("--symbols", type=int, metavar="N", help=f"symbols per run (default: {d.symbols_per_run})")
    run.add_argument("--mu", type=float, metavar="X", help=f"QLMS step size (default: {d.step_size})")
    run.add_argument("--delay", type=int, metavar="D", help=f"equalization delay in symbols (default: {d.delay})")
    run.add_argument(
        "--seed",
        type=int,
        metavar="S",
        help=f"master seed; falls back to ${SEED_ENV_VAR}, then {d.master_seed}",
    )
    run.add_argument(
        "--normalize-channel",
        choices=("on", "off"),
        help=f"rescale channels to exactly unit energy (default: {'on' if d.normalize_channel else 'off'})",
    )
    run.add_argument("--out", metavar="DIR", help=f"output directory (default: {DEFAULT_OUT_DIR})")
    run.add_argument("--config", metavar="PATH", help="key=value config file; flags override it")
    run.add_argument("--workers", type=int, metavar="N", help="worker processes for the Monte Carlo runs (default: 1)")
    return parser, run


def parse_args(argv) -> CliInvocation:
    """Resolve argv into a validated invocation; exits with a usage error on bad input."""
    parser, run_parser = build_parser()
    ns = parser.parse_args(list(argv))

    values: dict = {}
    if ns.config is not None:
        try:
            text = Path(ns.config).read_text(encoding="utf-8")
        except OSError as exc:
            run_parser.error(f"--config: cannot read {ns.config}: {exc}")
        try:
            values.update(config_values_from_mapping(parse_kv_lines(text)))
        except ValueError as exc:
            run_parser.error(f"--config: {exc}")

    flag_values = {
        "mode": ns.mode,
        "num_channel_taps": ns.taps,
        "equalizer_length": ns.eq_len,
        "snr_db": ns.snr_db,
        "snr_reference_point": ns.snr_ref,
        "num_runs": ns.runs,
        "symbols_per_run": ns.symbols,
        "step_size": ns.mu,
        "delay": ns.delay,
        "master_seed": ns.seed,
        "normalize_channel": None if ns.normalize_channel is None else ns.normalize_channel == "on",
    }
    values.update({field: value for field, value in flag_values.items() if value is not None})

    if "master_seed" not in values and SEED_ENV_VAR in os.environ:
        try:
            values["master_seed"] = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            run_parser.error(f"${SEED_ENV_VAR}: expected an integer, got {os.environ[SEED_ENV_VAR]!r}")

    config = dataclasses.replace(_DEFAULTS, **values)
    try:
        config.validate()
    except ValueError as exc:
        message = str(exc)
        field = message.split(":", 1)[0]
        flag = _FLAG_BY_FIELD.get(field)
        run_parser.error(message if flag is None else message.replace(field, flag, 1))

    workers = 1 if ns.workers is None else ns.workers
    if workers < 1:
        run_parser.error("--workers: must be at least 1")
    return CliInvocation(config=config, out_dir=Path(ns.out or DEFAULT_OUT_DIR), workers=workers)


def emit_learning_curve_csv(curve, path: Path) -> None:
    """Write `iteration,mse_db` rows for a LearningCurve; LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write("iteration,mse_db\n")
        for iteration, value in enumerate(curve.mse_per_iteration):
            stream.write(f"{iteration},{_format_value(float(value))}\n")


def _summary_lines(result, config: ExperimentConfig) -> list[str]:
    lines: list[str] = []
    if isinstance(result, SisoExperimentResult):
        record = summarize(result)
        lines.append(f"steady_state_db={_format_value(record.steady_state_db)}")
        lines.append(f"convergence_iteration={record.convergence_iteration}")
        lines.append(f"ser={_format_value(record.symbol_error_rate)}")
        lines.append(f"wiener_mse_db={_format_value(record.wiener_mse_db)}")
        lines.append(f"runs_diverged={record.runs_diverged}")
    elif isinstance(result, MimoExperimentResult):
        lines.append(f"runs_diverged={result.runs_diverged}")
        for stream, record in enumerate(summarize(result)):
            lines.append(f"steady_state_db_stream{stream}={_format_value(record.steady_state_db)}")
            lines.append(f"convergence_iteration_stream{stream}={record.convergence_iteration}")
            lines.append(f"ser_stream{stream}={_format_value(record.symbol_error_rate)}")
            lines.append(f"runs_diverged_stream{stream}={record.runs_diverged}")
    else:
        raise ValueError(f"cannot emit a summary for {type(result).__name__}")
    return lines + config_to_lines(config)


def emit_summary(result, config: ExperimentConfig, path: Path) -> None:
    """Flat key=value record: metrics first, then the config echo."""
    path.write_text("\n".join(_summary_lines(result, config)) + "\n", encoding="utf-8")


def _curve_filenames(config: ExperimentConfig) -> list[str]:
    if config.mode == MODE_MIMO:
        return [f"learning_curve_stream{s}.csv" for s in range(config.mimo_tx)]
    return ["learning_curve.csv"]


def emit_manifest(config: ExperimentConfig, output_names: list[str], path: Path) -> None:
    lines = [
        "artifact=quatlink",
        f"version={__version__}",
        f"created_utc={datetime.now(timezone.utc).isoformat(timespec='seconds')}",
    ]
    lines += [f"output{index}={name}" for index, name in enumerate(output_names)]
    lines += config_to_lines(config)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(result, config: ExperimentConfig, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    curve_names = _curve_filenames(config)
    curves = result.curves if isinstance(result, MimoExperimentResult) else [result.curve]
    for name, curve in zip(curve_names, curves):
        emit_learning_curve_csv(curve, out_dir / name)
        written.append(out_dir / name)
    emit_summary(result, config, out_dir / "summary.txt")
    written.append(out_dir / "summary.txt")
    emit_manifest(config, curve_names + ["summary.txt"], out_dir / "manifest.txt")
    written.append(out_dir / "manifest.txt")
    return written


def main(argv=None) -> int:
    invocation = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        result = run_experiment(invocation.config, workers=invocation.workers)
    except ExperimentFailedError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return 1
    try:
        written = write_outputs(result, invocation.config, invocation.out_dir)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, MimoExperimentResult):
        steady = ", ".join(f"stream{s} {c.steady_state_db:.2f} dB" for s, c in enumerate(result.curves))
    else:
        steady = f"{result.curve.steady_state_db:.2f} dB"
    print(f"steady state: {steady}")
    print(f"wrote {', '.join(str(p) for p in written)}")
    return 0
