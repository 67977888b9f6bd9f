"""Structured periodic test signals built from randomized all-pass pulses.

A unit pulse is constructed in the frequency domain by accumulating many
small randomized phase transitions, then inverse transforming. Every DFT bin
keeps magnitude one (the pulse is all-pass), while the accumulated group
delay spreads the energy in time into a bump whose RMS envelope approximates
a raised cosine of a requested width.

Three such pulses from independent seeds are overlap-added at quarter-period
shifts with orthogonal sign patterns (rows of the order-4 Hadamard matrix)
and gains (1, 1, sqrt(2)). The resulting period has constant DFT magnitude,
and the three pulses occupy disjoint bin classes (k mod 4 == 0, k mod 4 == 2,
k odd), which is what lets one recording yield three simultaneous estimates
of the same system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .signal_core import PeriodicSignal, mirror_spectrum

# row q of HADAMARD4 gives the four quarter-shift signs of pulse q; the last
# row is left unused by design (its slot patterns absorb even-order products)
HADAMARD4 = np.array(
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)

# mixing gains of the three pulses; sqrt(2) compensates the third pattern
# spreading over twice as many bins (all odd k) as the other two
MIX_GAINS = (1.0, 1.0, math.sqrt(2.0))

PHASE_SHAPES = ("erf", "sigmoid", "iir")

# slope-matched profile scalings: all three transitions rise with slope
# sqrt(pi) at u = 0, so equal widths give comparable local delay excursions
_SIGMOID_RATE = 4.0 / math.sqrt(math.pi)
_IIR_RATE = math.sqrt(math.pi)

# integral of the squared profile derivative, used to size transition widths
_PROFILE_ENERGY = {
    "erf": math.pi * math.sqrt(math.pi / 2.0),
    "sigmoid": 2.0 * math.pi**2 / (3.0 * math.sqrt(math.pi)),
    "iir": math.pi * math.sqrt(math.pi) / 2.0,
}

# calibration constants (see gen_unit_capricep): transitions per envelope
# sample, and the delay spread that best fits a raised-cosine power envelope
_TRANSITIONS_PER_SAMPLE = 0.64
_ENVELOPE_STD_FRACTION = 0.1808
_CALIBRATION_GROWTH = 1.25
_CALIBRATION_ATTEMPTS = 4
_ACCEPT_CORRELATION = 0.95
_FAIL_CORRELATION = 0.90


class GenerationError(RuntimeError):
    """Unit pulse calibration failed to reach its envelope target."""


@dataclass(frozen=True)
class UnitCapricep:
    """One all-pass unit pulse plus the parameters that produced it."""

    response: np.ndarray
    effective_width: float  # seconds; full width of the raised-cosine envelope
    transition_count: int
    shape: str
    seed: int
    sample_rate: float


@dataclass(frozen=True)
class StructuredTestSignal:
    """A measurement period built from three orthogonally structured pulses."""

    period: np.ndarray
    sample_rate: float
    unit_seeds: tuple[int, int, int] | None
    hadamard: np.ndarray
    mix_gains: tuple[float, float, float]
    repetitions_built: int

    @property
    def as_periodic(self) -> PeriodicSignal:
        return PeriodicSignal(self.period, self.sample_rate)


# ---------------------------------------------------------------------------
# phase transitions
# ---------------------------------------------------------------------------


def phase_transition(shape: str, u) -> np.ndarray:
    """Odd monotone phase profile with range (-pi/2, +pi/2).

    Shapes: "erf" (Gaussian integral), "sigmoid" (logistic), "iir"
    (first-order all-pass arctangent). All are scaled to identical slope at
    u = 0; they differ in how fast they saturate, which sets how sharply
    the resulting pulse decays.
    """
    u = np.asarray(u, dtype=float)
    if shape == "erf":
        return 0.5 * math.pi * special.erf(u)
    if shape == "sigmoid":
        return 0.5 * math.pi * np.tanh(0.5 * _SIGMOID_RATE * u)
    if shape == "iir":
        return np.arctan(_IIR_RATE * u)
    raise ValueError(f"unknown phase transition shape {shape!r}; use one of {PHASE_SHAPES}")


def group_delay(phase: np.ndarray, dft_length: int | None = None) -> np.ndarray:
    """Group delay in samples from an unwrapped bin-phase sequence.

    ``phase[k]`` is taken at bin k of a length-``dft_length`` DFT
    (default: len(phase)); the delay is -dphi/domega evaluated with central
    differences (one-sided at the ends).
    """
    phase = np.asarray(phase, dtype=float)
    if phase.size < 2:
        raise ValueError("phase sequence must have at least 2 bins")
    L = int(dft_length) if dft_length is not None else phase.size
    return -np.gradient(phase) * L / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# unit pulse generation
# ---------------------------------------------------------------------------


def _moving_mean(x: np.ndarray, window: int) -> np.ndarray:
    window = max(int(window), 1)
    if window == 1:
        return x.copy()
    kernel = np.ones(min(window, x.size))
    return np.convolve(x, kernel, mode="same") / np.convolve(
        np.ones_like(x), kernel, mode="same"
    )


def envelope_correlation(response: np.ndarray, width_samples: float) -> tuple[float, float]:
    """Cosine similarity of a pulse's RMS envelope to the raised-cosine target.

    Returns (correlation, centroid). The comparison window extends half the
    target width beyond the raised cosine on each side, so energy leaking
    far into the tails lowers the score.
    """
    response = np.asarray(response, dtype=float)
    power = _moving_mean(np.square(response), int(width_samples) // 16)
    total = power.sum()
    if total <= 0:
        return 0.0, 0.5 * response.size
    centroid = float(np.arange(response.size) @ power / total)
    lo = max(int(centroid - 0.75 * width_samples), 0)
    hi = min(int(centroid + 0.75 * width_samples) + 1, response.size)
    n = np.arange(lo, hi)
    envelope = np.sqrt(power[lo:hi])
    target = 0.5 * (1.0 + np.cos(2.0 * math.pi * (n - centroid) / width_samples))
    target[np.abs(n - centroid) > 0.5 * width_samples] = 0.0
    target = np.sqrt(target)
    denom = math.sqrt(float(envelope @ envelope) * float(target @ target))
    if denom == 0.0:
        return 0.0, centroid
    return float(envelope @ target) / denom, centroid


def _accumulate_phase(
    shape: str, length: int, centers: np.ndarray, polarities: np.ndarray, width: float
) -> np.ndarray:
    k = np.arange(length // 2 + 1, dtype=float)
    phase = np.zeros(k.size)
    chunk = max(1, int(4e6 // k.size))
    for i in range(0, centers.size, chunk):
        u = (k[None, :] - centers[i : i + chunk, None]) / width
        phase += (2.0 * polarities[i : i + chunk, None] * phase_transition(shape, u)).sum(axis=0)
    return phase


def gen_unit_capricep(
    seed: int,
    effective_width: float,
    sample_rate: float,
    length: int,
    shape: str = "erf",
) -> UnitCapricep:
    """Generate one all-pass unit pulse.

    Parameters
    ----------
    seed : int
        PRNG seed; the pulse is a deterministic function of all arguments.
    effective_width : float
        Full width (seconds) of the raised-cosine RMS envelope target.
    sample_rate : float
        Sampling rate in Hz.
    length : int
        DFT length L (power of two). Must satisfy
        effective_width * sample_rate < L / 2.
    shape : str
        Phase transition shape, one of ``PHASE_SHAPES``.

    Notes
    -----
    Transition centers are drawn uniformly over (0, L/2), polarities by fair
    coin. The transition count starts at a calibrated density and the width
    is sized so the accumulated group delay spread matches the raised-cosine
    envelope; if the realized envelope correlates poorly with the target the
    count is increased and the pulse rebuilt. Raises
    :class:`GenerationError` when the correlation stays below 0.9.
    """
    length = int(length)
    if length < 16 or (length & (length - 1)) != 0:
        raise ValueError(f"length must be a power of two >= 16, got {length}")
    if shape not in PHASE_SHAPES:
        raise ValueError(f"unknown phase transition shape {shape!r}; use one of {PHASE_SHAPES}")
    width_samples = effective_width * sample_rate
    if not 0 < width_samples < length / 2:
        raise ValueError(
            f"effective width of {width_samples:.0f} samples does not fit a "
            f"length-{length} pulse (needs 0 < width < L/2)"
        )

    rng = np.random.default_rng(seed)
    sigma_tau = _ENVELOPE_STD_FRACTION * width_samples
    density_scale = (2.0 / math.pi**2) * _PROFILE_ENERGY[shape]
    count0 = max(int(round(_TRANSITIONS_PER_SAMPLE * width_samples)), 8)

    best: tuple[float, np.ndarray, int] | None = None
    for attempt in range(_CALIBRATION_ATTEMPTS):
        count = int(round(count0 * _CALIBRATION_GROWTH**attempt))
        width = density_scale * count * length / sigma_tau**2
        centers = rng.uniform(0.0, length / 2.0, size=count)
        polarities = rng.integers(0, 2, size=count) * 2.0 - 1.0
        phase = _accumulate_phase(shape, length, centers, polarities, width)

        phase -= phase[0]  # DC bin must be exactly real and positive
        # land the Nyquist phase on a multiple of pi via a global linear term
        # (at most half a sample of added delay, no spectral discontinuity)
        residue = round(phase[-1] / math.pi) * math.pi - phase[-1]
        phase += residue * np.arange(phase.size) / (length // 2)

        half = np.exp(1j * phase)
        half[0] = 1.0
        half[-1] = math.copysign(1.0, math.cos(phase[-1]))
        half *= (-1.0) ** np.arange(phase.size)  # center the pulse at L/2
        response = np.fft.ifft(mirror_spectrum(half, length)).real

        corr, _ = envelope_correlation(response, width_samples)
        if best is None or corr > best[0]:
            best = (corr, response, count)
        if corr >= _ACCEPT_CORRELATION:
            break

    corr, response, count = best
    if corr < _FAIL_CORRELATION:
        raise GenerationError(
            f"envelope correlation {corr:.3f} stayed below {_FAIL_CORRELATION} "
            f"after {_CALIBRATION_ATTEMPTS} attempts (last count {count}); "
            f"widen the pulse or allow more transitions"
        )
    return UnitCapricep(
        response=response,
        effective_width=effective_width,
        transition_count=count,
        shape=shape,
        seed=seed,
        sample_rate=sample_rate,
    )


# ---------------------------------------------------------------------------
# orthogonal structuring
# ---------------------------------------------------------------------------


def _unit_response(unit) -> np.ndarray:
    if isinstance(unit, UnitCapricep):
        return unit.response
    return np.asarray(unit, dtype=float)


def build_base_unit(units, period_len: int) -> np.ndarray:
    """Overlap-add the three pulses at quarter-period shifts with their signs.

    Element q is placed at offsets (r-1)*N/4 for r = 1..4, weighted by
    HADAMARD4[q-1, r-1] and MIX_GAINS[q-1]. Accepts UnitCapricep objects or
    bare arrays (lengths at most 6*N/4). Returns the linear (non-wrapped)
    buffer.
    """
    if len(units) != 3:
        raise ValueError(f"exactly 3 units are required, got {len(units)}")
    N = int(period_len)
    if N < 4 or N % 4 != 0:
        raise ValueError(f"period length must be a positive multiple of 4, got {N}")
    responses = [_unit_response(u) for u in units]
    for i, r in enumerate(responses):
        if r.ndim != 1 or r.size < 1:
            raise ValueError(f"unit {i + 1} is not a non-empty 1-D sequence")
        if r.size > 6 * N // 4:
            raise ValueError(
                f"unit {i + 1} is {r.size} samples long; at most 6*N/4 = {6 * N // 4} fit"
            )
    quarter = N // 4
    buffer = np.zeros(3 * quarter + max(r.size for r in responses))
    for q, response in enumerate(responses):
        for r in range(4):
            start = r * quarter
            buffer[start : start + response.size] += (
                MIX_GAINS[q] * HADAMARD4[q, r] * response
            )
    return buffer


def build_periodic_test_signal(
    units, period_len: int, repetitions: int, sample_rate: float | None = None
) -> StructuredTestSignal:
    """Overlap-add ``repetitions`` copies of the base unit and excerpt a period.

    Copies are placed one period apart; the excerpt starts at
    (repetitions/2 - 1) * N, deep enough inside the build-up that every
    pulse tail has wrapped in. ``repetitions`` must be even and >= 8.
    """
    P = int(repetitions)
    if P < 8 or P % 2 != 0:
        raise ValueError(f"repetitions must be an even number >= 8, got {P}")
    N = int(period_len)
    base = build_base_unit(units, N)
    buffer = np.zeros((P - 1) * N + base.size)
    for p in range(P):
        buffer[p * N : p * N + base.size] += base
    start = (P // 2 - 1) * N
    period = buffer[start : start + N].copy()

    if sample_rate is None:
        rates = {u.sample_rate for u in units if isinstance(u, UnitCapricep)}
        if len(rates) > 1:
            raise ValueError("units disagree on sample rate; pass sample_rate explicitly")
        sample_rate = rates.pop() if rates else 1.0
    seeds = tuple(u.seed for u in units if isinstance(u, UnitCapricep))
    return StructuredTestSignal(
        period=period,
        sample_rate=float(sample_rate),
        unit_seeds=seeds if len(seeds) == 3 else None,
        hadamard=HADAMARD4.copy(),
        mix_gains=MIX_GAINS,
        repetitions_built=P,
    )


def make_structured_signal(
    seeds,
    period_len: int,
    repetitions: int = 8,
    sample_rate: float = 44100.0,
    shape: str = "erf",
    effective_width: float | None = None,
) -> StructuredTestSignal:
    """Generate three unit pulses and structure them into a test period.

    ``period_len`` must be a power of two here (the pulses use it as their
    DFT length, which makes the period's DFT magnitude exactly constant).
    Default envelope width is 0.45 periods.
    """
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) != 3 or len(set(seeds)) != 3:
        raise ValueError("three distinct seeds are required")
    if effective_width is None:
        effective_width = 0.45 * period_len / sample_rate
    units = [
        gen_unit_capricep(s, effective_width, sample_rate, period_len, shape)
        for s in seeds
    ]
    return build_periodic_test_signal(units, period_len, repetitions, sample_rate)


# ---------------------------------------------------------------------------
# alternative excitations
# ---------------------------------------------------------------------------


def shape_spectrum(p: PeriodicSignal, target) -> PeriodicSignal:
    """Impose a one-sided magnitude target while preserving bin phases.

    ``target`` is "flat", "pink" (magnitude proportional to 1/sqrt(f),
    referenced to bin 1), or a positive magnitude sequence of length
    N/2 + 1. The DC bin is forced to zero and the output is peak-normalized
    to 0.9.
    """
    N = len(p)
    if N % 2 != 0:
        raise ValueError("spectrum shaping expects an even period length")
    half_len = N // 2 + 1
    if isinstance(target, str):
        if target == "flat":
            magnitude = np.ones(half_len)
        elif target == "pink":
            magnitude = np.zeros(half_len)
            magnitude[1:] = 1.0 / np.sqrt(np.arange(1, half_len))
        else:
            raise ValueError(f"unknown spectrum target {target!r}; use 'flat' or 'pink'")
    else:
        magnitude = np.asarray(target, dtype=float)
        if magnitude.shape != (half_len,):
            raise ValueError(
                f"custom target must have N/2+1 = {half_len} entries, got {magnitude.shape}"
            )
        if np.any(magnitude[1:] <= 0):
            raise ValueError("custom target must be positive for bins k >= 1")

    bins = np.fft.fft(p.period)
    phase = np.angle(bins[:half_len])
    half = magnitude * np.exp(1j * phase)
    half[0] = 0.0  # no DC in an excitation
    half[-1] = half[-1].real  # Nyquist phase of a real signal is 0 or pi
    period = np.fft.ifft(mirror_spectrum(half, N)).real
    peak = np.max(np.abs(period))
    if peak == 0.0:
        raise ValueError("shaped period is identically zero")
    return PeriodicSignal(period * (0.9 / peak), p.sample_rate)


def gen_swept_sine(period_len: int, sample_rate: float) -> PeriodicSignal:
    """Classic repeating swept sine with unit DFT magnitude on every bin.

    Built in the frequency domain with a quadratic phase, giving a group
    delay that rises linearly from 0 to 0.9*N across the band: a monotone
    low-to-high sweep occupying 90% of the period.
    """
    N = int(period_len)
    if N < 16 or N % 2 != 0:
        raise ValueError(f"period length must be even and >= 16, got {N}")
    m = int(round(0.45 * N))
    k = np.arange(N // 2 + 1, dtype=float)
    phase = -4.0 * math.pi * m * np.square(k) / N**2
    half = np.exp(1j * phase)
    half[0] = 1.0
    half[-1] = math.copysign(1.0, math.cos(phase[-1]))  # exp(-j*pi*m) = +-1
    period = np.fft.ifft(mirror_spectrum(half, N)).real
    return PeriodicSignal(period, sample_rate)
