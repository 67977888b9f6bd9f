"""Measurement reports: display curves plus JSON/CSV serialization.

A report reduces an estimation result to the three curves a measurement
session is judged by (gain, random/time-varying level, signal-dependent
level, all fractional-octave smoothed in dB) together with the averaged
impulse response and enough metadata to reproduce the run. Serialization
is loss-free and deterministic: the same report always yields the same
bytes, and a JSON round trip restores an equal report.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .estimator import PolarityPairResult, RepetitionResult, SimultaneousResult
from .signal_core import bin_frequencies, power_db, third_octave_smooth

_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MeasurementReport:
    """Smoothed measurement curves and their provenance.

    ``gain_db``, ``rtv_db`` and ``sdti_db`` are one-sided sequences of
    ``period_len // 2 + 1`` values. ``sdti_db`` and ``even_energy`` are
    None when the measurement path cannot provide them (plain repetition,
    single-polarity recording).
    """

    sample_rate: float
    period_len: int
    periods_used: int
    method: str  # "periodic" | "simultaneous" | "polarity-pair"
    gain_db: np.ndarray
    rtv_db: np.ndarray
    impulse_response: np.ndarray
    sdti_db: np.ndarray | None = None
    even_energy: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        half = self.period_len // 2 + 1
        for name in ("gain_db", "rtv_db", "sdti_db"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.asarray(value, dtype=float)
            if value.shape != (half,):
                raise ValueError(
                    f"{name} must have {half} bins for period {self.period_len}, "
                    f"got shape {value.shape}"
                )
            object.__setattr__(self, name, value)
        object.__setattr__(
            self, "impulse_response", np.asarray(self.impulse_response, dtype=float)
        )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.periods_used < 2:
            raise ValueError("periods_used must be at least 2")

    @property
    def frequencies(self) -> np.ndarray:
        return bin_frequencies(self.period_len, self.sample_rate)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurementReport):
            return NotImplemented
        return to_json(self) == to_json(other)


def _smoothed_db(power: np.ndarray, width: float) -> np.ndarray:
    return power_db(third_octave_smooth(np.asarray(power, dtype=float), width))


def build_report(result, metadata: dict | None = None, smoothing_width: float = 1.0 / 3.0) -> MeasurementReport:
    """Reduce an estimation result to a :class:`MeasurementReport`.

    Accepts the output of ``estimate_with_repetitions``,
    ``estimate_simultaneous`` or ``estimate_polarity_pair``.
    """
    metadata = dict(metadata or {})
    even_energy = None
    if isinstance(result, PolarityPairResult):
        even_energy = float(np.sum(np.square(result.even_ir)))
        result = result.combined
        method = "polarity-pair"
    elif isinstance(result, SimultaneousResult):
        method = "simultaneous"
    elif isinstance(result, RepetitionResult):
        method = "periodic"
    else:
        raise TypeError(f"cannot build a report from {type(result).__name__}")

    if method == "periodic":
        rep = result
        bins = rep.mean_transfer.bins
        N = bins.size
        half = N // 2 + 1
        ir = np.fft.ifft(bins).real
        sdti_db = None
    else:
        rep = result.rtv
        bins = rep.mean_transfer.bins
        N = bins.size
        half = N // 2 + 1
        ir = result.sdti.mean_ir
        sdti_db = _smoothed_db(result.sdti.sdti_bins, smoothing_width)

    gain_db = _smoothed_db(np.square(np.abs(bins[:half])), smoothing_width)
    rtv_db = _smoothed_db(rep.rtv_level, smoothing_width)
    return MeasurementReport(
        sample_rate=rep.mean_transfer.sample_rate,
        period_len=N,
        periods_used=rep.periods_used,
        method=method,
        gain_db=gain_db,
        rtv_db=rtv_db,
        impulse_response=ir,
        sdti_db=sdti_db,
        even_energy=even_energy,
        metadata=metadata,
    )


def to_json(report: MeasurementReport) -> str:
    """Serialize a report to deterministic JSON text."""
    payload = {
        "format_version": _FORMAT_VERSION,
        "sample_rate": report.sample_rate,
        "period_len": report.period_len,
        "periods_used": report.periods_used,
        "method": report.method,
        "gain_db": report.gain_db.tolist(),
        "rtv_db": report.rtv_db.tolist(),
        "sdti_db": None if report.sdti_db is None else report.sdti_db.tolist(),
        "even_energy": report.even_energy,
        "impulse_response": report.impulse_response.tolist(),
        "metadata": report.metadata,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> MeasurementReport:
    """Inverse of :func:`to_json`."""
    payload = json.loads(text)
    version = payload.get("format_version")
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported report format version: {version!r}")
    return MeasurementReport(
        sample_rate=payload["sample_rate"],
        period_len=payload["period_len"],
        periods_used=payload["periods_used"],
        method=payload["method"],
        gain_db=np.asarray(payload["gain_db"], dtype=float),
        rtv_db=np.asarray(payload["rtv_db"], dtype=float),
        impulse_response=np.asarray(payload["impulse_response"], dtype=float),
        sdti_db=None
        if payload["sdti_db"] is None
        else np.asarray(payload["sdti_db"], dtype=float),
        even_energy=payload["even_energy"],
        metadata=payload.get("metadata", {}),
    )


def to_csv(report: MeasurementReport) -> str:
    """Per-bin curve table: frequency plus the three dB curves.

    The SDTI column is left empty when the measurement path did not
    produce one.
    """
    out = io.StringIO()
    out.write("freq_hz,gain_db,rtv_db,sdti_db\n")
    freqs = report.frequencies
    sdti = report.sdti_db
    for k in range(freqs.size):
        sdti_text = "" if sdti is None else f"{sdti[k]:.12g}"
        out.write(
            f"{freqs[k]:.12g},{report.gain_db[k]:.12g},"
            f"{report.rtv_db[k]:.12g},{sdti_text}\n"
        )
    return out.getvalue()
