"""Report construction and loss-free serialization."""

import numpy as np
import pytest

from acoustimate.capricep import gen_swept_sine, make_structured_signal
from acoustimate.estimator import (
    estimate_polarity_pair,
    estimate_simultaneous,
    estimate_with_repetitions,
)
from acoustimate.report import MeasurementReport, build_report, from_json, to_csv, to_json
from acoustimate.signal_core import power_db, third_octave_smooth
from acoustimate.simulator import SimTarget, apply_target, synth_impulse_response
from acoustimate.signal_core import Signal

from conftest import cyclic_convolve, random_fir

FS = 44100.0
N = 1024


@pytest.fixture(scope="module")
def rep_result():
    ref = gen_swept_sine(N, FS)
    acquired = np.tile(cyclic_convolve(ref.period, random_fir(1, 32)), 6)
    return estimate_with_repetitions(ref, acquired)


@pytest.fixture(scope="module")
def sim_result():
    sig = make_structured_signal((1, 2, 3), N, sample_rate=FS)
    target = SimTarget(synth_impulse_response(401, 32 / FS, FS, 64), eps3=0.01)
    acquired = apply_target(target, Signal(np.tile(sig.period, 9), FS))
    return estimate_simultaneous(sig, acquired)


@pytest.fixture(scope="module")
def pair_result():
    sig = make_structured_signal((1, 2, 3), N, sample_rate=FS)
    target = SimTarget(synth_impulse_response(401, 32 / FS, FS, 64), eps2=0.01)
    pos = apply_target(target, Signal(np.tile(sig.period, 9), FS))
    neg = apply_target(target, Signal(np.tile(-sig.period, 9), FS))
    return estimate_polarity_pair(sig, pos, neg)


class TestBuildReport:
    def test_periodic_dispatch(self, rep_result):
        report = build_report(rep_result)
        assert report.method == "periodic"
        assert report.sdti_db is None
        assert report.even_energy is None
        assert report.period_len == N
        assert report.periods_used == 5
        assert report.gain_db.shape == (N // 2 + 1,)
        want_ir = np.fft.ifft(rep_result.mean_transfer.bins).real
        assert np.array_equal(report.impulse_response, want_ir)

    def test_simultaneous_dispatch(self, sim_result):
        report = build_report(sim_result)
        assert report.method == "simultaneous"
        assert report.sdti_db is not None
        assert report.even_energy is None
        assert np.array_equal(report.impulse_response, sim_result.sdti.mean_ir)

    def test_polarity_pair_dispatch(self, pair_result):
        report = build_report(pair_result)
        assert report.method == "polarity-pair"
        assert report.even_energy == float(np.sum(np.square(pair_result.even_ir)))
        assert report.even_energy > 0.0
        assert report.periods_used == 16

    def test_gain_curve_is_smoothed_power(self, rep_result):
        report = build_report(rep_result)
        bins = rep_result.mean_transfer.bins[: N // 2 + 1]
        want = power_db(third_octave_smooth(np.square(np.abs(bins)), 1.0 / 3.0))
        assert np.array_equal(report.gain_db, want)

    def test_metadata_attached(self, rep_result):
        report = build_report(rep_result, metadata={"note": "bench 3", "run": 7})
        assert report.metadata == {"note": "bench 3", "run": 7}

    def test_rejects_foreign_types(self):
        with pytest.raises(TypeError, match="cannot build a report"):
            build_report(np.zeros(8))


class TestValidation:
    def base_kwargs(self):
        half = np.zeros(N // 2 + 1)
        return dict(
            sample_rate=FS,
            period_len=N,
            periods_used=4,
            method="periodic",
            gain_db=half,
            rtv_db=half.copy(),
            impulse_response=np.zeros(N),
        )

    def test_wrong_curve_length(self):
        kwargs = self.base_kwargs()
        kwargs["gain_db"] = np.zeros(N // 2)
        with pytest.raises(ValueError, match="gain_db must have"):
            MeasurementReport(**kwargs)

    def test_too_few_periods(self):
        kwargs = self.base_kwargs()
        kwargs["periods_used"] = 1
        with pytest.raises(ValueError, match="at least 2"):
            MeasurementReport(**kwargs)

    def test_bad_sample_rate(self):
        kwargs = self.base_kwargs()
        kwargs["sample_rate"] = 0.0
        with pytest.raises(ValueError, match="sample_rate"):
            MeasurementReport(**kwargs)

    def test_frequencies_axis(self):
        report = MeasurementReport(**self.base_kwargs())
        freqs = report.frequencies
        assert freqs.shape == (N // 2 + 1,)
        assert freqs[0] == 0.0
        assert freqs[-1] == FS / 2.0


class TestSerialization:
    def test_json_roundtrip_equality(self, sim_result):
        report = build_report(sim_result, metadata={"seeds": [1, 2, 3]})
        assert from_json(to_json(report)) == report

    def test_json_roundtrip_periodic(self, rep_result):
        report = build_report(rep_result)
        got = from_json(to_json(report))
        assert got == report
        assert got.sdti_db is None

    def test_json_deterministic_with_trailing_newline(self, pair_result):
        report = build_report(pair_result)
        text = to_json(report)
        assert text == to_json(report)
        assert text.endswith("}\n")

    def test_json_rejects_other_versions(self, rep_result):
        text = to_json(build_report(rep_result)).replace(
            '"format_version": 1', '"format_version": 999'
        )
        with pytest.raises(ValueError, match="format version"):
            from_json(text)

    def test_csv_layout(self, sim_result):
        report = build_report(sim_result)
        lines = to_csv(report).splitlines()
        assert lines[0] == "freq_hz,gain_db,rtv_db,sdti_db"
        assert len(lines) == 1 + N // 2 + 1
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert len(first) == 4

    def test_csv_blank_sdti_for_periodic(self, rep_result):
        lines = to_csv(build_report(rep_result)).splitlines()
        assert all(line.endswith(",") for line in lines[1:])

    def test_reports_with_different_curves_are_unequal(self, rep_result):
        a = build_report(rep_result)
        b = build_report(rep_result, metadata={"x": 1})
        assert a != b
