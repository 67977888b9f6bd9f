"""Synthetic target behavior: polynomial, convolution, drift, noise."""

import math

import numpy as np
import pytest

from acoustimate.signal_core import Signal
from acoustimate.simulator import (
    DriftSpec,
    NoiseSpec,
    SimTarget,
    SimulationOverflowError,
    apply_target,
    synth_impulse_response,
    synth_voice_like_period,
)

FS = 44100.0


class TestSynthImpulseResponse:
    def test_single_tap_is_unity(self):
        assert np.array_equal(synth_impulse_response(0, 0.01, FS, 1), [1.0])

    def test_deterministic(self):
        a = synth_impulse_response(7, 0.002, FS, 128)
        b = synth_impulse_response(7, 0.002, FS, 128)
        assert np.array_equal(a, b)

    def test_matches_decaying_noise_definition(self):
        seed, decay, length = 11, 0.0015, 96
        rng = np.random.default_rng(seed)
        t = np.arange(length) / FS
        want = rng.standard_normal(length) * np.exp(-math.log(1000.0) * t / decay)
        want = want / want[np.argmax(np.abs(want))]
        assert np.array_equal(synth_impulse_response(seed, decay, FS, length), want)

    def test_largest_tap_is_plus_one(self):
        for seed in range(8):
            ir = synth_impulse_response(seed, 0.001, FS, 64)
            assert ir[np.argmax(np.abs(ir))] == 1.0
            assert np.max(np.abs(ir)) == 1.0

    def test_envelope_reaches_minus_60_db_at_decay_time(self):
        # strip the random part with the same seed; what remains is the decay
        # envelope (decay_time chosen to land exactly on sample 44)
        seed, length = 3, 128
        decay = 44 / FS
        ir = synth_impulse_response(seed, decay, FS, length)
        white = np.random.default_rng(seed).standard_normal(length)
        envelope = np.abs(ir / white)
        assert envelope[44] / envelope[0] == pytest.approx(1e-3, rel=1e-9)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError, match="at least 1"):
            synth_impulse_response(0, 0.01, FS, 0)
        with pytest.raises(ValueError, match="positive"):
            synth_impulse_response(0, -0.01, FS, 8)
        with pytest.raises(ValueError, match="positive"):
            synth_impulse_response(0, 0.01, 0.0, 8)


class TestSpecValidation:
    def test_noise_kind_rejected(self):
        with pytest.raises(ValueError, match="white.*pink"):
            NoiseSpec("blue", 0.1)

    def test_noise_level_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            NoiseSpec("white", -0.1)

    @pytest.mark.parametrize("depth", [1.0, 1.5, -0.1])
    def test_drift_depth_rejected(self, depth):
        with pytest.raises(ValueError, match="depth"):
            DriftSpec(depth, 1.0)

    def test_drift_rate_rejected(self):
        with pytest.raises(ValueError, match="rate"):
            DriftSpec(0.1, -1.0)

    def test_target_ir_rejected(self):
        with pytest.raises(ValueError, match="1-D"):
            SimTarget(np.ones((2, 2)))
        with pytest.raises(ValueError, match="1-D"):
            SimTarget(np.array([]))
        with pytest.raises(ValueError, match="finite"):
            SimTarget(np.array([1.0, np.nan]))


class TestApplyTarget:
    def test_unit_ir_is_identity(self):
        x = np.random.default_rng(1).standard_normal(64)
        out = apply_target(SimTarget(np.array([1.0])), Signal(x, FS))
        assert np.array_equal(out.samples, x)
        assert out.sample_rate == FS

    def test_linear_case_matches_convolution(self):
        rng = np.random.default_rng(2)
        x, ir = rng.standard_normal(50), rng.standard_normal(8)
        out = apply_target(SimTarget(ir), Signal(x, FS))
        assert out.samples.size == 57
        assert np.array_equal(out.samples, np.convolve(x, ir))

    def test_superposition_holds_only_without_distortion(self):
        rng = np.random.default_rng(3)
        x, y, ir = rng.standard_normal(40), rng.standard_normal(40), rng.standard_normal(6)

        def run(target, v):
            return apply_target(target, Signal(v, FS)).samples

        linear = SimTarget(ir)
        gap = run(linear, x + y) - run(linear, x) - run(linear, y)
        assert np.max(np.abs(gap)) < 1e-12

        bent = SimTarget(ir, eps3=0.1)
        gap = run(bent, x + y) - run(bent, x) - run(bent, y)
        assert np.max(np.abs(gap)) > 1e-3

    def test_polarity_flip_isolates_even_distortion(self):
        # y(x) + y(-x) keeps only the square term: 2*conv(eps2*x^2, ir)
        rng = np.random.default_rng(4)
        x, ir = rng.standard_normal(64), rng.standard_normal(10)
        eps2 = 0.02
        target = SimTarget(ir, eps2=eps2, eps3=0.005)
        total = (
            apply_target(target, Signal(x, FS)).samples
            + apply_target(target, Signal(-x, FS)).samples
        )
        want = 2.0 * np.convolve(eps2 * np.square(x), ir)
        assert np.max(np.abs(total - want)) < 1e-13

    def test_noise_is_deterministic(self):
        x = np.random.default_rng(5).standard_normal(256)
        target = SimTarget(np.array([1.0, 0.3]), noise=NoiseSpec("white", 0.05), seed=42)
        a = apply_target(target, Signal(x, FS)).samples
        b = apply_target(target, Signal(x, FS)).samples
        assert np.array_equal(a, b)

    def test_noise_seed_changes_realization(self):
        x = np.zeros(256)
        base = dict(ir=np.array([1.0]), noise=NoiseSpec("white", 0.05))
        a = apply_target(SimTarget(seed=1, **base), Signal(x, FS)).samples
        b = apply_target(SimTarget(seed=2, **base), Signal(x, FS)).samples
        assert not np.array_equal(a, b)

    def test_white_noise_level_sets_rms(self):
        # silence in, pure noise out; sample std concentrates near the level
        sigma = 0.1
        target = SimTarget(np.array([1.0]), noise=NoiseSpec("white", sigma), seed=7)
        out = apply_target(target, Signal(np.zeros(100_000), FS)).samples
        assert np.std(out) == pytest.approx(sigma, rel=0.05)

    def test_pink_noise_rms_and_tilt(self):
        target = SimTarget(np.array([1.0]), noise=NoiseSpec("pink", 0.2), seed=8)
        out = apply_target(target, Signal(np.zeros(65_536), FS)).samples
        assert np.sqrt(np.mean(np.square(out))) == pytest.approx(0.2, rel=1e-9)
        spectrum = np.abs(np.fft.rfft(out)) ** 2
        low = np.mean(spectrum[1:2048])
        high = np.mean(spectrum[16384:32768])
        assert low > 5.0 * high

    def test_drift_reconstruction(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(2048)
        drift = DriftSpec(depth=0.3, rate=5.0)
        out = apply_target(SimTarget(np.array([1.0]), drift=drift), Signal(x, FS)).samples
        t = np.arange(x.size) / FS
        want = x * (1.0 + 0.3 * np.sin(2.0 * math.pi * 5.0 * t))
        assert np.array_equal(out, want)

    def test_zero_rate_drift_is_inactive(self):
        x = np.random.default_rng(10).standard_normal(64)
        out = apply_target(
            SimTarget(np.array([1.0]), drift=DriftSpec(depth=0.5, rate=0.0)), Signal(x, FS)
        ).samples
        assert np.array_equal(out, x)

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_overflow_raises(self):
        x = np.full(16, 1e200)
        with pytest.raises(SimulationOverflowError, match="not finite"):
            apply_target(SimTarget(np.array([1.0]), eps3=1.0), Signal(x, FS))


class TestVoiceLikePeriod:
    def test_deterministic(self):
        a = synth_voice_like_period(1, 2048, FS)
        b = synth_voice_like_period(1, 2048, FS)
        assert np.array_equal(a.period, b.period)

    def test_peak_level(self):
        p = synth_voice_like_period(2, 2048, FS)
        assert np.max(np.abs(p.period)) == pytest.approx(0.9)
        assert p.sample_rate == FS

    def test_no_dc(self):
        p = synth_voice_like_period(3, 2048, FS)
        assert abs(np.fft.fft(p.period)[0]) < 1e-9

    def test_spectral_contrast_exceeds_60_db(self):
        # harmonics tower over the broadband floor; that contrast is the
        # whole point of this fixture
        p = synth_voice_like_period(4, 8192, FS)
        mag = np.abs(np.fft.fft(p.period)[1:4096])
        assert np.max(mag) / np.min(mag) > 1000.0

    def test_most_bins_sit_on_the_floor(self):
        p = synth_voice_like_period(5, 8192, FS)
        mag = np.abs(np.fft.fft(p.period)[1:4096])
        assert np.mean(mag < 1e-3 * np.max(mag)) > 0.5

    @pytest.mark.parametrize("bad", [63, 65, 62, 0])
    def test_rejects_bad_lengths(self, bad):
        with pytest.raises(ValueError, match="even and >= 64"):
            synth_voice_like_period(0, bad, FS)
