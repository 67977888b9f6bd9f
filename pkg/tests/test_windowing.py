"""Truncation weightings: wrapped sums, folding, side-lobe optimization."""

import numpy as np
import pytest

from acoustimate.windowing import (
    WRAP_TOL,
    WeightingFunction,
    cosine_series_window,
    fold_to_period,
    max_sidelobe_db,
    optimize_weighting,
    periodic_weighting,
)


def wrap_error(w: WeightingFunction) -> float:
    wrapped = w.samples.reshape(-1, w.period_len).sum(axis=0)
    return float(np.max(np.abs(wrapped - 1.0)))


# ---------------------------------------------------------------------------
# cosine-series prototypes
# ---------------------------------------------------------------------------


class TestCosineSeriesWindow:
    def test_single_coefficient_is_rectangular(self):
        assert np.array_equal(cosine_series_window([1.0], 32), np.ones(32))

    def test_hann_identity(self):
        # raised cosine: 0.5 - 0.5*cos(2*pi*n/width), zero at n = 0
        got = cosine_series_window([0.5, -0.5], 64)
        n = np.arange(64)
        want = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / 64)
        assert np.max(np.abs(got - want)) < 1e-15
        assert got[0] == pytest.approx(0.0)
        assert got[32] == pytest.approx(1.0)

    def test_rejects_empty_coeffs(self):
        with pytest.raises(ValueError, match="non-empty"):
            cosine_series_window([], 32)

    def test_rejects_nonpositive_leading_coeff(self):
        with pytest.raises(ValueError, match="coeffs\\[0\\]"):
            cosine_series_window([-1.0, 0.5], 32)


# ---------------------------------------------------------------------------
# periodic weighting construction
# ---------------------------------------------------------------------------


class TestPeriodicWeighting:
    def test_rect_prototype_wrapped_sum(self):
        w = periodic_weighting([1.0], 64, 2)
        assert wrap_error(w) <= WRAP_TOL

    def test_hann_prototype_wrapped_sum(self):
        w = periodic_weighting([0.5, -0.5], 64, 2)
        assert wrap_error(w) <= WRAP_TOL

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_random_prototypes_wrapped_sum(self, seed):
        rng = np.random.default_rng(seed)
        coeffs = np.concatenate([[1.0], rng.uniform(-1.0, 1.0, 3)])
        w = periodic_weighting(coeffs, 48, 2)
        assert wrap_error(w) <= WRAP_TOL

    def test_span_three_wrapped_sum(self):
        w = periodic_weighting([0.5, -0.5], 32, 3)
        assert w.span == 3
        assert wrap_error(w) <= WRAP_TOL

    def test_tail_sample_outside_support_is_zero(self):
        # the convolution support is span*N - 1 samples, one short of the buffer
        w = periodic_weighting([0.5, -0.5], 64, 2)
        assert w.samples[-1] == 0.0

    def test_rejects_span_below_two(self):
        with pytest.raises(ValueError, match="span"):
            periodic_weighting([1.0], 64, 1)

    def test_constructor_rejects_bad_wrapped_sum(self):
        with pytest.raises(ValueError, match="wrapped sums"):
            WeightingFunction(coeffs=np.array([1.0]), period_len=4, samples=np.ones(8))


# ---------------------------------------------------------------------------
# folding
# ---------------------------------------------------------------------------


class TestFoldToPeriod:
    def test_periodic_input_is_preserved(self):
        rng = np.random.default_rng(10)
        period = rng.standard_normal(64)
        w = periodic_weighting([0.5, -0.5], 64, 2)
        folded = fold_to_period(np.tile(period, 2), w)
        assert np.max(np.abs(folded - period)) < 1e-12

    def test_periodic_input_preserved_by_random_weighting(self):
        rng = np.random.default_rng(11)
        period = rng.standard_normal(32)
        w = periodic_weighting([1.0, -0.7, 0.1], 32, 2)
        folded = fold_to_period(np.tile(period, 2), w)
        assert np.max(np.abs(folded - period)) < 1e-12

    def test_zeros_fold_to_zeros(self):
        w = periodic_weighting([0.5, -0.5], 16, 2)
        assert np.array_equal(fold_to_period(np.zeros(32), w), np.zeros(16))

    def test_rejects_length_mismatch(self):
        w = periodic_weighting([1.0], 16, 2)
        with pytest.raises(ValueError, match="length"):
            fold_to_period(np.zeros(31), w)

    def test_asynchronous_tone_leaks_less_than_truncation(self):
        # tone between bins: folding with a weighting beats chopping one period
        fs, N = 44100.0, 4096
        f = 1000.0 + np.pi
        x = np.sin(2.0 * np.pi * f * np.arange(2 * N) / fs)
        w = periodic_weighting([0.5, -0.5], N, 2)
        folded_mag = np.abs(np.fft.rfft(fold_to_period(x, w)))
        rect_mag = np.abs(np.fft.rfft(x[:N]))

        def off_peak(mag, radius=3):
            peak = int(np.argmax(mag))
            mask = np.ones(mag.size, bool)
            mask[max(peak - radius, 0) : peak + radius + 1] = False
            return np.max(mag[mask]) / mag[peak]

        assert off_peak(folded_mag) < off_peak(rect_mag)


# ---------------------------------------------------------------------------
# side-lobe measurement and optimization
# ---------------------------------------------------------------------------


class TestSidelobe:
    def test_rectangular_first_sidelobe(self):
        # classic -13.26 dB for an unweighted rectangle
        assert max_sidelobe_db(np.ones(64)) == pytest.approx(-13.26, abs=0.2)

    def test_hann_below_rectangular(self):
        hann = cosine_series_window([0.5, -0.5], 64)
        assert max_sidelobe_db(hann) < max_sidelobe_db(np.ones(64))

    def test_rejects_tiny_input(self):
        with pytest.raises(ValueError, match="2 samples"):
            max_sidelobe_db(np.ones(1))


class TestOptimizer:
    def test_one_term_is_trivial(self):
        assert np.array_equal(optimize_weighting(1), [1.0])

    def test_two_terms_match_grid_search(self):
        # frozen grid oracle (step 1e-3 over the single free ratio, N=64,
        # span 2): best ratio -0.419 at a -38.62 dB side-lobe
        N = 64
        coeffs = optimize_weighting(2, period_len=N, budget=400, n_starts=2)
        achieved = max_sidelobe_db(periodic_weighting(coeffs, N, 2))
        ratio = coeffs[1] / coeffs[0]
        assert abs(ratio - (-0.419)) <= 0.05 * 0.419 or achieved <= -38.62 + 0.1

    def test_sidelobe_monotone_in_terms(self):
        side = []
        for k in (1, 2, 3):
            coeffs = optimize_weighting(k, period_len=128, budget=600, n_starts=2)
            side.append(max_sidelobe_db(periodic_weighting(coeffs, 128, 2)))
        assert side[1] <= side[0] + 1e-9
        assert side[2] <= side[1] + 1e-9

    def test_optimized_four_terms_beat_hann_weighting(self):
        baseline = max_sidelobe_db(periodic_weighting([0.5, -0.5], 128, 2))
        coeffs = optimize_weighting(4, period_len=128, budget=800, n_starts=3)
        assert max_sidelobe_db(periodic_weighting(coeffs, 128, 2)) < baseline

    def test_rejects_nonpositive_terms(self):
        with pytest.raises(ValueError, match="terms"):
            optimize_weighting(0)
