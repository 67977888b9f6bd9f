"""SVG rendering of measurement reports.

Rendering is a pure function of the report content: matplotlib's Agg
backend, a fixed hash salt and suppressed date metadata make repeated
renders byte-identical. Layout follows the measurement display convention:
smoothed dB curves against log frequency, and short-term impulse-response
power in dB against time.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .report import MeasurementReport
from .signal_core import rms_envelope_db

_SVG_STYLE = {
    "svg.hashsalt": "acoustimate",
    "figure.figsize": (8.0, 4.5),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_spectrum_svg(report: MeasurementReport, path) -> Path:
    """Gain / RTV / SDTI curves in dB over log frequency."""
    path = Path(path)
    freqs = report.frequencies
    with matplotlib.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots()
        # bin 0 has no place on a log axis
        ax.semilogx(freqs[1:], report.gain_db[1:], label="gain", color="tab:blue")
        ax.semilogx(
            freqs[1:],
            report.rtv_db[1:],
            label="random + time-varying",
            color="tab:red",
        )
        if report.sdti_db is not None:
            ax.semilogx(
                freqs[1:],
                report.sdti_db[1:],
                label="signal dependent",
                color="tab:orange",
            )
        ax.set_xlabel("frequency (Hz)")
        ax.set_ylabel("level (dB)")
        ax.set_title(f"measurement curves ({report.method})")
        ax.legend(loc="lower left")
        _save(fig, path)
    return path


def render_ir_svg(report: MeasurementReport, path, window_len: int | None = None) -> Path:
    """Short-term impulse-response power in dB over time."""
    path = Path(path)
    ir = report.impulse_response
    if window_len is None:
        window_len = max(1, ir.size // 128)
    level = rms_envelope_db(ir, window_len)
    t_ms = 1000.0 * (1.0 / report.sample_rate) * np.arange(ir.size)
    with matplotlib.rc_context(_SVG_STYLE):
        fig, ax = plt.subplots()
        ax.plot(t_ms, level, color="tab:blue")
        ax.set_xlabel("time (ms)")
        ax.set_ylabel("smoothed power (dB)")
        ax.set_title("impulse response")
        _save(fig, path)
    return path


def render_report(report: MeasurementReport, out_dir, stem: str) -> list[Path]:
    """Write the standard plot set; returns the created paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        render_spectrum_svg(report, out_dir / f"{stem}_spectrum.svg"),
        render_ir_svg(report, out_dir / f"{stem}_ir.svg"),
    ]
