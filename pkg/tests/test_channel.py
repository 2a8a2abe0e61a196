"""Tests for the quaternion FIR channel, noise calibration, and seeding."""

import numpy as np
import pytest

from quatlink import channel, modem, quat
from quatlink.errors import DimensionMismatchError

from oracles import convolve_loop


class TestRng:
    def test_make_rng_is_deterministic(self):
        a = channel.make_rng(1234).normal(size=8)
        b = channel.make_rng(1234).normal(size=8)
        assert np.array_equal(a, b)

    def test_derive_rng_keys_are_independent(self):
        base = channel.derive_rng(7, 0, 0).normal(size=4)
        other = channel.derive_rng(7, 1, 0).normal(size=4)
        assert not np.array_equal(base, other)

    def test_derive_rng_repeatable(self):
        assert np.array_equal(
            channel.derive_rng(7, 3, 2, 1).normal(size=4),
            channel.derive_rng(7, 3, 2, 1).normal(size=4),
        )

    def test_negative_seed_accepted(self):
        channel.derive_rng(-5, 0).normal()


class TestGaussianQuaternions:
    def test_zero_variance_is_zero(self):
        draws = channel.gaussian_quaternions(channel.make_rng(0), 0.0, 10)
        assert np.array_equal(draws, np.zeros((10, 4)))

    def test_sample_statistics(self):
        draws = channel.gaussian_quaternions(channel.make_rng(1), 1.0, 100_000)
        assert np.abs(draws.mean(axis=0)).max() < 0.02
        assert np.allclose(draws.var(axis=0), 1.0, rtol=0.05)
        assert np.isclose(quat.norm_sq(draws).mean(), 4.0, rtol=0.05)

    def test_identical_seeds_identical_draws(self):
        a = channel.gaussian_quaternions(channel.make_rng(5), 0.3, 16)
        b = channel.gaussian_quaternions(channel.make_rng(5), 0.3, 16)
        assert np.array_equal(a, b)

    def test_negative_variance_rejected(self):
        with pytest.raises(ValueError):
            channel.gaussian_quaternions(channel.make_rng(0), -1.0, 4)

    def test_single_draw_shape(self):
        assert channel.gaussian_quaternions(channel.make_rng(0), 1.0).shape == (4,)


class TestRandomChannel:
    def test_single_tap_normalized(self):
        taps = channel.random_channel_taps(channel.make_rng(2), 1, normalize=True)
        assert np.isclose(quat.norm_sq(taps).sum(), 1.0, atol=1e-12)

    def test_four_taps_normalized(self):
        taps = channel.random_channel_taps(channel.make_rng(3), 4, normalize=True)
        assert np.isclose(quat.norm_sq(taps).sum(), 1.0, atol=1e-12)

    def test_unnormalized_mean_energy_is_one(self):
        rng = channel.make_rng(4)
        energies = [
            quat.norm_sq(channel.random_channel_taps(rng, 4, normalize=False)).sum()
            for _ in range(10_000)
        ]
        assert np.isclose(np.mean(energies), 1.0, rtol=0.05)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            channel.ChannelModel(np.zeros((3, 4)))
        with pytest.raises(ValueError):
            channel.ChannelModel(np.ones((3, 4)), noise_variance_per_component=-0.1)
        model = channel.random_channel(channel.make_rng(0), 4)
        assert model.num_taps == 4
        assert np.isclose(model.energy, 1.0, atol=1e-12)


class TestConvolve:
    def test_identity_tap(self):
        rng = np.random.default_rng(50)
        signal = rng.normal(size=(32, 4))
        assert np.allclose(channel.convolve(signal, quat.ONE[None]), signal)

    def test_single_tap_order_sensitive(self):
        out = channel.convolve(quat.I[None], quat.J[None])
        assert np.array_equal(out[0], -quat.K)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(51)
        signal, taps = rng.normal(size=(64, 4)), rng.normal(size=(4, 4))
        assert np.allclose(channel.convolve(signal, taps), convolve_loop(signal, taps), atol=1e-13)

    def test_linearity(self):
        rng = np.random.default_rng(52)
        a, b, taps = rng.normal(size=(40, 4)), rng.normal(size=(40, 4)), rng.normal(size=(3, 4))
        lhs = channel.convolve(a + b, taps)
        rhs = channel.convolve(a, taps) + channel.convolve(b, taps)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_taps_longer_than_signal(self):
        signal = quat.ONE[None]
        taps = np.stack([np.array(quat.I), np.array(quat.J), np.array(quat.K)])
        out = channel.convolve(signal, taps)
        assert np.array_equal(out, quat.I[None])

    def test_empty_rejected(self):
        with pytest.raises(DimensionMismatchError):
            channel.convolve(np.zeros((0, 4)), np.ones((2, 4)))

    def test_batched_leading_axes(self):
        rng = np.random.default_rng(53)
        signals, taps = rng.normal(size=(5, 20, 4)), rng.normal(size=(5, 3, 4))
        batched = channel.convolve(signals, taps)
        for i in range(5):
            assert np.array_equal(batched[i], channel.convolve(signals[i], taps[i]))


class TestApplySiso:
    def test_noiseless_identity_channel(self):
        rng = np.random.default_rng(54)
        signal = rng.normal(size=(20, 4))
        model = channel.ChannelModel(quat.ONE[None], 0.0)
        assert np.allclose(channel.apply_siso(model, signal, channel.make_rng(0)), signal)

    def test_pure_noise_power(self):
        variance = 0.25
        model = channel.ChannelModel(quat.ONE[None], variance)
        out = channel.apply_siso(model, np.zeros((100_000, 4)), channel.make_rng(1))
        assert np.isclose(quat.norm_sq(out).mean(), 4 * variance, rtol=0.05)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(55)
        signal = rng.normal(size=(64, 4))
        model = channel.ChannelModel(rng.normal(size=(4, 4)), 0.1)
        a = channel.apply_siso(model, signal, channel.make_rng(9))
        b = channel.apply_siso(model, signal, channel.make_rng(9))
        assert np.array_equal(a, b)


class TestApplyMimo:
    def test_one_by_one_equals_siso(self):
        rng = np.random.default_rng(56)
        signal = rng.normal(size=(50, 4))
        taps = rng.normal(size=(3, 4))
        siso = channel.apply_siso(channel.ChannelModel(taps, 0.2), signal, channel.make_rng(3))
        mimo = channel.apply_mimo(
            channel.MimoChannelModel(taps[None, None], 0.2), signal[None], channel.make_rng(3)
        )
        assert np.array_equal(mimo[0], siso)

    def test_identity_grid_passthrough(self):
        rng = np.random.default_rng(57)
        signals = rng.normal(size=(2, 30, 4))
        grid = np.zeros((2, 2, 1, 4))
        grid[0, 0, 0] = quat.ONE
        grid[1, 1, 0] = quat.ONE
        out = channel.apply_mimo(channel.MimoChannelModel(grid, 0.0), signals, channel.make_rng(0))
        assert np.allclose(out, signals)

    def test_matches_bruteforce_superposition(self):
        rng = np.random.default_rng(58)
        signals = rng.normal(size=(2, 40, 4))
        grid = rng.normal(size=(2, 2, 4, 4))
        out = channel.apply_mimo(channel.MimoChannelModel(grid, 0.0), signals, channel.make_rng(0))
        for r in range(2):
            expected = convolve_loop(signals[0], grid[r, 0]) + convolve_loop(signals[1], grid[r, 1])
            assert np.allclose(out[r], expected, atol=1e-12)

    def test_stream_count_mismatch(self):
        grid = np.zeros((2, 2, 1, 4))
        grid[..., 0] = 1.0
        with pytest.raises(DimensionMismatchError):
            channel.apply_mimo(channel.MimoChannelModel(grid), np.zeros((3, 10, 4)), channel.make_rng(0))

    def test_random_grid_normalization(self):
        grid = channel.random_mimo_grid(channel.make_rng(6), 2, 2, 4, normalize=True)
        assert grid.shape == (2, 2, 4, 4)
        assert np.isclose(quat.norm_sq(grid).sum(), 1.0, atol=1e-12)

    def test_random_grid_expected_energy(self):
        rng = channel.make_rng(7)
        energies = [
            quat.norm_sq(channel.random_mimo_grid(rng, 2, 2, 4, normalize=False)).sum()
            for _ in range(4000)
        ]
        assert np.isclose(np.mean(energies), 1.0, rtol=0.05)


class TestSnrCalibration:
    def test_equal_power_at_zero_db(self):
        assert channel.noise_variance_for_snr(4.0, 0.0) == 1.0

    def test_twenty_db(self):
        assert np.isclose(channel.noise_variance_for_snr(4.0, 20.0), 0.01)

    def test_infinite_snr_silences_noise(self):
        assert channel.noise_variance_for_snr(4.0, np.inf) == 0.0

    def test_nonpositive_power_rejected(self):
        with pytest.raises(ValueError):
            channel.noise_variance_for_snr(0.0, 10.0)

    def test_expected_output_power(self):
        taps = channel.random_channel_taps(channel.make_rng(8), 4, normalize=True)
        assert np.isclose(channel.expected_output_power(taps), 4.0, atol=1e-12)

    def test_measured_output_power_matches_expectation(self):
        """Sampled noiseless output power converges to 4x the channel energy."""
        rng = channel.make_rng(9)
        taps = channel.random_channel_taps(rng, 4, normalize=True)
        symbols = modem.index_to_symbol(rng.integers(0, 16, 20_000))
        clean = channel.convolve(symbols, taps)
        assert np.isclose(quat.norm_sq(clean).mean(), 4.0, rtol=0.03)

    def test_measured_snr_within_tolerance(self):
        rng = channel.make_rng(10)
        taps = channel.random_channel_taps(rng, 4, normalize=True)
        symbols = modem.index_to_symbol(rng.integers(0, 16, 100_000))
        clean = channel.convolve(symbols, taps)
        variance = channel.noise_variance_for_snr(channel.expected_output_power(taps), 15.0)
        noise = channel.gaussian_quaternions(rng, variance, clean.shape[0])
        measured = 10 * np.log10(quat.norm_sq(clean).mean() / quat.norm_sq(noise).mean())
        assert abs(measured - 15.0) < 0.3
