"""SVG rendering: file creation and byte determinism."""

import numpy as np
import pytest

from acoustimate.capricep import make_structured_signal
from acoustimate.estimator import estimate_simultaneous
from acoustimate.plots import render_ir_svg, render_report, render_spectrum_svg
from acoustimate.report import build_report, from_json, to_json
from acoustimate.signal_core import Signal
from acoustimate.simulator import SimTarget, apply_target, synth_impulse_response

FS = 44100.0


@pytest.fixture(scope="module")
def report():
    sig = make_structured_signal((1, 2, 3), 1024, sample_rate=FS)
    target = SimTarget(synth_impulse_response(401, 32 / FS, FS, 64), eps3=0.01)
    acquired = apply_target(target, Signal(np.tile(sig.period, 9), FS))
    return build_report(estimate_simultaneous(sig, acquired))


def test_render_report_writes_both_plots(tmp_path, report):
    paths = render_report(report, tmp_path, "run1")
    assert [p.name for p in paths] == ["run1_spectrum.svg", "run1_ir.svg"]
    for p in paths:
        data = p.read_bytes()
        assert len(data) > 1000
        assert b"<svg" in data


def test_rendering_is_deterministic(tmp_path, report):
    a = render_spectrum_svg(report, tmp_path / "a.svg").read_bytes()
    b = render_spectrum_svg(report, tmp_path / "b.svg").read_bytes()
    assert a == b
    c = render_ir_svg(report, tmp_path / "c.svg").read_bytes()
    d = render_ir_svg(report, tmp_path / "d.svg").read_bytes()
    assert c == d


def test_roundtripped_report_renders_identically(tmp_path, report):
    clone = from_json(to_json(report))
    a = render_spectrum_svg(report, tmp_path / "a.svg").read_bytes()
    b = render_spectrum_svg(clone, tmp_path / "b.svg").read_bytes()
    assert a == b
