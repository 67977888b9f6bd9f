"""Discrete-time signal and spectrum primitives shared by the measurement stack.

DFT convention used throughout the package: the forward transform is
unnormalized and the inverse carries the 1/L factor, so ``idft(dft(x)) == x``.
One-sided quantities (display, smoothing, thresholds) cover bins 0..L/2.
All operations are pure functions; the containers are frozen records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DB_FLOOR = -200.0  # silence clamps here instead of -inf
_DENOM_MIN = 1e-300  # below this a spectral denominator counts as zero


class ZeroDenominatorError(ValueError):
    """Spectral division hit zero (or denormal) denominator bins.

    ``bins`` holds the offending bin indices; callers are expected to
    safeguard the denominator spectrum before dividing.
    """

    def __init__(self, bins: np.ndarray, context: str = "spectral division"):
        self.bins = np.asarray(bins, dtype=int)
        shown = ", ".join(str(b) for b in self.bins[:8])
        more = "" if self.bins.size <= 8 else f", +{self.bins.size - 8} more"
        super().__init__(
            f"{context}: denominator magnitude below {_DENOM_MIN:g} at "
            f"{self.bins.size} bin(s) [{shown}{more}]; safeguard the "
            f"denominator spectrum first"
        )


class AsymmetricSpectrumError(ValueError):
    """Inverse transform of a spectrum that is not conjugate-symmetric."""

    def __init__(self, deviation: float, tolerance: float):
        self.deviation = deviation
        super().__init__(
            f"spectrum is not conjugate-symmetric: relative deviation "
            f"{deviation:.3e} exceeds {tolerance:.0e}; a real inverse "
            f"transform is undefined"
        )


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signal:
    """A finite real sampled waveform."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("Signal.samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Signal.samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("Signal.sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrum:
    """Complex DFT bins under the package convention (see module docstring)."""

    bins: np.ndarray
    sample_rate: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=complex)
        if bins.ndim != 1 or bins.size < 2:
            raise ValueError("Spectrum.bins must be 1-D with at least 2 bins")
        if not np.all(np.isfinite(bins)):
            raise ValueError("Spectrum.bins must be finite")
        if not self.sample_rate > 0:
            raise ValueError("Spectrum.sample_rate must be positive")
        object.__setattr__(self, "bins", bins)

    def __len__(self) -> int:
        return self.bins.size


@dataclass(frozen=True)
class PeriodicSignal:
    """One period of an indefinitely repeating real waveform."""

    period: np.ndarray
    sample_rate: float

    def __post_init__(self):
        period = np.asarray(self.period, dtype=float)
        if period.ndim != 1 or period.size < 1:
            raise ValueError("PeriodicSignal.period must be non-empty and 1-D")
        if not np.all(np.isfinite(period)):
            raise ValueError("PeriodicSignal.period must be finite")
        if not self.sample_rate > 0:
            raise ValueError("PeriodicSignal.sample_rate must be positive")
        object.__setattr__(self, "period", period)

    def __len__(self) -> int:
        return self.period.size


def _coerce_samples(x, sample_rate=None) -> tuple[np.ndarray, float]:
    if isinstance(x, Signal):
        return x.samples, x.sample_rate
    if isinstance(x, PeriodicSignal):
        return x.period, x.sample_rate
    return np.asarray(x, dtype=float), float(sample_rate or 1.0)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def dft(x, length: int | None = None, sample_rate: float | None = None) -> Spectrum:
    """Forward DFT of a real sequence, zero-extended to ``length``.

    Parameters
    ----------
    x : Signal, PeriodicSignal or array_like
        Real input samples.
    length : int, optional
        Transform length L >= len(x); defaults to len(x).
    sample_rate : float, optional
        Only used when ``x`` is a bare array (defaults to 1.0).
    """
    samples, rate = _coerce_samples(x, sample_rate)
    L = samples.size if length is None else int(length)
    if L < 2:
        raise ValueError(f"invalid DFT length {L}: must be at least 2")
    if L < samples.size:
        raise ValueError(
            f"DFT length {L} shorter than the signal ({samples.size} samples)"
        )
    return Spectrum(bins=np.fft.fft(samples, n=L), sample_rate=rate)


def idft(spectrum: Spectrum, symmetry_tol: float = 1e-9) -> np.ndarray:
    """Inverse DFT back to real samples.

    The spectrum must be conjugate-symmetric within ``symmetry_tol``
    (relative to its largest magnitude); otherwise the real inverse does
    not exist and :class:`AsymmetricSpectrumError` is raised.
    """
    bins = spectrum.bins
    L = bins.size
    mirrored = np.conj(bins[(-np.arange(L)) % L])
    scale = float(np.max(np.abs(bins)))
    deviation = 0.0 if scale == 0.0 else float(np.max(np.abs(bins - mirrored))) / scale
    if deviation > symmetry_tol:
        raise AsymmetricSpectrumError(deviation, symmetry_tol)
    return np.fft.ifft(bins).real


def mirror_spectrum(half: np.ndarray, length: int) -> np.ndarray:
    """Expand one-sided bins 0..L/2 to a full conjugate-symmetric spectrum."""
    half = np.asarray(half, dtype=complex)
    if length % 2 != 0:
        raise ValueError("mirror_spectrum expects an even DFT length")
    if half.size != length // 2 + 1:
        raise ValueError(
            f"one-sided spectrum must have {length // 2 + 1} bins, got {half.size}"
        )
    return np.concatenate([half, np.conj(half[-2:0:-1])])


def bin_frequencies(length: int, sample_rate: float) -> np.ndarray:
    """Frequencies in Hz of the one-sided bins 0..L/2."""
    return np.arange(length // 2 + 1) * (sample_rate / length)


# ---------------------------------------------------------------------------
# periodic helpers
# ---------------------------------------------------------------------------


def cyclic_shift(p: PeriodicSignal, shift: int) -> PeriodicSignal:
    """Rotate a period: the sample at n moves to (n + shift) mod N."""
    return PeriodicSignal(np.roll(p.period, int(shift)), p.sample_rate)


def spectral_divide(numerator: Spectrum, denominator: Spectrum) -> Spectrum:
    """Per-bin ratio of two equal-length spectra.

    Raises :class:`ZeroDenominatorError` naming the offending bins when any
    denominator magnitude is below 1e-300; callers must safeguard first.
    """
    if len(numerator) != len(denominator):
        raise ValueError(
            f"spectrum lengths differ: {len(numerator)} vs {len(denominator)}"
        )
    if numerator.sample_rate != denominator.sample_rate:
        raise ValueError("spectra have different sample rates")
    bad = np.flatnonzero(np.abs(denominator.bins) < _DENOM_MIN)
    if bad.size:
        raise ZeroDenominatorError(bad)
    return Spectrum(numerator.bins / denominator.bins, numerator.sample_rate)


# ---------------------------------------------------------------------------
# smoothing and level utilities
# ---------------------------------------------------------------------------


def third_octave_smooth(power: np.ndarray, width_octaves: float = 1.0 / 3.0) -> np.ndarray:
    """Fractional-octave smoothing of a one-sided power sequence.

    Each bin k >= 1 is replaced by the mean of the bins inside
    [k * 2**(-w/2), k * 2**(+w/2)] (clipped to the sequence); bin 0 passes
    through unchanged. As ``width_octaves`` approaches 0 the input is
    returned unchanged.
    """
    power = np.asarray(power, dtype=float)
    if power.ndim != 1 or power.size < 1:
        raise ValueError("power must be a non-empty 1-D sequence")
    if np.any(power < 0):
        raise ValueError("power entries must be non-negative")
    if width_octaves < 0:
        raise ValueError("width_octaves must be non-negative")
    out = power.copy()
    if power.size == 1 or width_octaves == 0.0:
        return out
    k = np.arange(1, power.size)
    half = 2.0 ** (width_octaves / 2.0)
    # the 1e-12 nudge keeps exact band edges (k*2**0 = k) inside the window
    lo = np.ceil(k / half - 1e-12).astype(int)
    hi = np.floor(k * half + 1e-12).astype(int)
    lo = np.clip(lo, 0, power.size - 1)
    hi = np.clip(hi, 0, power.size - 1)
    csum = np.concatenate([[0.0], np.cumsum(power)])
    out[1:] = (csum[hi + 1] - csum[lo]) / (hi - lo + 1)
    return out


def power_db(power: np.ndarray | float) -> np.ndarray:
    """10*log10 with the module floor (-200 dB) applied."""
    p = np.maximum(np.asarray(power, dtype=float), 10.0 ** (DB_FLOOR / 10.0))
    return 10.0 * np.log10(p)


def amplitude_db(amplitude: np.ndarray | float) -> np.ndarray:
    """20*log10 with the module floor (-200 dB) applied."""
    return power_db(np.square(np.asarray(amplitude, dtype=float)))


def rms_envelope_db(x, window_len: int) -> np.ndarray:
    """Short-term RMS level in dB: 10*log10 of a moving average of squares.

    The moving average is centered and renormalized at the edges, so a
    constant input maps to a constant level. Output length equals input
    length; silence clamps at -200 dB.
    """
    samples, _ = _coerce_samples(x)
    window_len = int(window_len)
    if window_len < 1:
        raise ValueError("window_len must be at least 1")
    p = np.square(samples)
    if window_len == 1:
        return power_db(p)
    kernel = np.ones(min(window_len, p.size))
    num = np.convolve(p, kernel, mode="same")
    den = np.convolve(np.ones_like(p), kernel, mode="same")
    return power_db(num / den)
