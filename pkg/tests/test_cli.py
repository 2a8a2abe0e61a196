"""Tests for the command-line front end and its file formats."""

import numpy as np
import pytest

from quatlink import cli
from quatlink.harness import ExperimentConfig, LearningCurve


def parse(*argv):
    return cli.parse_args(["run", *argv])


class TestParseArgs:
    def test_bare_run_gives_defaults(self):
        invocation = parse()
        assert invocation.config == ExperimentConfig()
        assert invocation.workers == 1
        assert invocation.out_dir.name == cli.DEFAULT_OUT_DIR

    def test_mode_and_seed(self):
        invocation = parse("--mode", "siso", "--seed", "42")
        assert invocation.config == ExperimentConfig(mode="siso", master_seed=42)

    def test_reference_configuration_flags(self):
        invocation = parse("--snr-db", "20", "--runs", "200", "--eq-len", "15", "--taps", "4")
        config = invocation.config
        assert (config.snr_db, config.num_runs, config.equalizer_length, config.num_channel_taps) == (
            20.0,
            200,
            15,
            4,
        )

    def test_all_documented_flags(self):
        invocation = parse(
            "--mode", "mimo",
            "--taps", "3",
            "--eq-len", "9",
            "--snr-db", "25.5",
            "--snr-ref", "transmitter",
            "--runs", "7",
            "--symbols", "900",
            "--mu", "0.02",
            "--delay", "4",
            "--seed", "99",
            "--normalize-channel", "off",
            "--out", "results",
            "--workers", "2",
        )
        assert invocation.config == ExperimentConfig(
            mode="mimo",
            num_channel_taps=3,
            equalizer_length=9,
            snr_db=25.5,
            snr_reference_point="transmitter",
            num_runs=7,
            symbols_per_run=900,
            step_size=0.02,
            delay=4,
            master_seed=99,
            normalize_channel=False,
        )
        assert invocation.workers == 2
        assert invocation.out_dir.name == "results"

    def test_infinite_snr_accepted(self):
        assert parse("--snr-db", "inf").config.snr_db == np.inf

    def test_zero_equalizer_length_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            parse("--eq-len", "0")
        assert excinfo.value.code == 2
        assert "--eq-len" in capsys.readouterr().err

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit):
            parse("--bogus", "1")

    def test_bad_choice_rejected(self):
        with pytest.raises(SystemExit):
            parse("--mode", "triplex")

    def test_missing_subcommand_rejected(self):
        with pytest.raises(SystemExit):
            cli.parse_args([])

    def test_negative_workers_rejected(self):
        with pytest.raises(SystemExit):
            parse("--workers", "0")

    def test_help_lists_every_flag(self):
        _, run_parser = cli.build_parser()
        text = run_parser.format_help()
        for flag in (
            "--mode", "--taps", "--eq-len", "--snr-db", "--snr-ref", "--runs", "--symbols",
            "--mu", "--delay", "--seed", "--normalize-channel", "--out", "--config", "--workers",
        ):
            assert flag in text
        assert "default: 15" in text  # equalizer length default is advertised


class TestConfigFile:
    def test_flags_override_config_file_over_defaults(self, tmp_path):
        path = tmp_path / "experiment.cfg"
        path.write_text("num_runs=5\nmaster_seed=9\nsnr_db=12.5\n", encoding="utf-8")
        invocation = parse("--config", str(path), "--runs", "7")
        assert invocation.config.num_runs == 7  # flag wins
        assert invocation.config.master_seed == 9  # file wins over default
        assert invocation.config.snr_db == 12.5

    def test_unknown_config_key_rejected(self, tmp_path):
        path = tmp_path / "experiment.cfg"
        path.write_text("bogus_knob=1\n", encoding="utf-8")
        with pytest.raises(SystemExit):
            parse("--config", str(path))

    def test_missing_config_file_rejected(self, tmp_path):
        with pytest.raises(SystemExit):
            parse("--config", str(tmp_path / "absent.cfg"))

    def test_comments_and_blanks_ignored(self):
        mapping = cli.parse_kv_lines("# comment\n\nmode=mimo\n")
        assert mapping == {"mode": "mimo"}

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            cli.parse_kv_lines("justakey\n")

    def test_mimo_dimensions_settable_from_file(self, tmp_path):
        path = tmp_path / "experiment.cfg"
        path.write_text("mode=mimo\nmimo_tx=2\nmimo_rx=2\n", encoding="utf-8")
        assert parse("--config", str(path)).config.mode == "mimo"


class TestSeedEnvironmentFallback:
    def test_env_seed_used_when_flag_absent(self, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "123")
        assert parse().config.master_seed == 123

    def test_flag_overrides_env(self, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "123")
        assert parse("--seed", "5").config.master_seed == 5

    def test_config_file_overrides_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "123")
        path = tmp_path / "experiment.cfg"
        path.write_text("master_seed=77\n", encoding="utf-8")
        assert parse("--config", str(path)).config.master_seed == 77

    def test_garbage_env_seed_rejected(self, monkeypatch):
        monkeypatch.setenv(cli.SEED_ENV_VAR, "not-a-number")
        with pytest.raises(SystemExit):
            parse()


class TestConfigEcho:
    def test_round_trip_through_mapping(self):
        config = ExperimentConfig(mode="mimo", snr_db=np.inf, master_seed=17, normalize_channel=False)
        lines = cli.config_to_lines(config)
        recovered = cli.config_from_mapping(cli.parse_kv_lines("\n".join(lines)))
        assert recovered == config

    def test_ignore_unknown_skips_metrics(self):
        text = "steady_state_db=-11.5\nmode=siso\nnum_runs=4\n"
        config = cli.config_from_mapping(cli.parse_kv_lines(text), ignore_unknown=True)
        assert config.num_runs == 4
        with pytest.raises(ValueError):
            cli.config_from_mapping(cli.parse_kv_lines(text))


class TestEmitters:
    def test_csv_schema(self, tmp_path):
        curve = LearningCurve(np.array([-1.0, -2.5, -3.25]), -3.25, 0)
        path = tmp_path / "curve.csv"
        cli.emit_learning_curve_csv(curve, path)
        raw = path.read_bytes()
        assert raw == b"iteration,mse_db\n0,-1.0\n1,-2.5\n2,-3.25\n"

    def test_csv_is_reproducible(self, tmp_path):
        curve = LearningCurve(np.array([-1.0, -2.0]), -2.0, 0)
        cli.emit_learning_curve_csv(curve, tmp_path / "a.csv")
        cli.emit_learning_curve_csv(curve, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestMainEndToEnd:
    ARGS = ["--runs", "4", "--symbols", "600", "--seed", "3"]

    def test_siso_writes_everything(self, tmp_path, capsys):
        assert cli.main(["run", *self.ARGS, "--out", str(tmp_path / "out")]) == 0
        out = tmp_path / "out"
        assert (out / "learning_curve.csv").exists()
        summary = (out / "summary.txt").read_text(encoding="utf-8")
        for key in ("steady_state_db=", "convergence_iteration=", "ser=", "wiener_mse_db=", "runs_diverged="):
            assert key in summary
        assert "runs_diverged=0" in summary
        config = cli.config_from_mapping(cli.parse_kv_lines(summary), ignore_unknown=True)
        assert config == ExperimentConfig(num_runs=4, symbols_per_run=600, master_seed=3)
        manifest = (out / "manifest.txt").read_text(encoding="utf-8")
        assert cli.config_from_mapping(cli.parse_kv_lines(manifest), ignore_unknown=True) == config
        assert "version=" in manifest

    def test_reruns_are_byte_identical(self, tmp_path):
        cli.main(["run", *self.ARGS, "--out", str(tmp_path / "first")])
        cli.main(["run", *self.ARGS, "--out", str(tmp_path / "second")])
        for name in ("learning_curve.csv", "summary.txt"):
            assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    def test_mimo_writes_per_stream_files(self, tmp_path):
        assert cli.main(["run", "--mode", "mimo", *self.ARGS, "--out", str(tmp_path / "out")]) == 0
        out = tmp_path / "out"
        assert (out / "learning_curve_stream0.csv").exists()
        assert (out / "learning_curve_stream1.csv").exists()
        summary = (out / "summary.txt").read_text(encoding="utf-8")
        for key in ("steady_state_db_stream0=", "ser_stream1=", "runs_diverged="):
            assert key in summary

    def test_unwritable_out_dir_fails_nonzero(self, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory", encoding="utf-8")
        assert cli.main(["run", *self.ARGS, "--out", str(blocker)]) == 1
        assert "cannot write" in capsys.readouterr().err

    def test_experiment_failure_exits_nonzero(self, tmp_path, capsys):
        args = ["run", "--runs", "2", "--symbols", "150", "--mu", "50.0", "--out", str(tmp_path / "out")]
        assert cli.main(args) == 1
        assert "failed" in capsys.readouterr().err
