"""Three-stage transfer estimation plus spectral safeguarding.

Stage 1 treats a single presentation as a linear convolution (zero-padded
division). Stage 2 exploits periodic excitation: averaging per-period
transfer estimates gives the LTI response, and their variance across
periods gives the random / time-varying (RTV) component. Stage 3 separates
the signal-dependent time-invariant (SDTI) component, either serially
(variance across measurements with different test signals) or
simultaneously from one recording of an orthogonally structured period.

Safeguarding lifts near-zero magnitude bins of an arbitrary excitation to a
frequency-dependent threshold before it is used as a division reference, so
that spectral valleys do not amplify background noise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capricep import HADAMARD4, StructuredTestSignal
from .signal_core import (
    PeriodicSignal,
    Signal,
    Spectrum,
    ZeroDenominatorError,
    _DENOM_MIN,
    idft,
    mirror_spectrum,
    spectral_divide,
    third_octave_smooth,
)


class InsufficientDataError(ValueError):
    """Not enough acquired periods for the requested estimate."""


@dataclass(frozen=True)
class TransferEstimate:
    """A transfer function estimate and its impulse response."""

    transfer: Spectrum
    impulse_response: np.ndarray
    method: str  # "linear", "periodic", or "simultaneous"


@dataclass(frozen=True)
class RepetitionResult:
    """Average transfer across repeated periods plus per-bin variance."""

    mean_transfer: Spectrum
    rtv_level: np.ndarray  # one-sided power: variance across periods per bin
    periods_used: int


@dataclass(frozen=True)
class SdtiResult:
    """Signal-dependent deviation estimate."""

    mean_ir: np.ndarray
    sdti_level: np.ndarray  # per-sample deviation power
    source: str  # "serial" or "orthogonal"
    sdti_bins: np.ndarray | None = None  # one-sided per-bin deviation power


@dataclass(frozen=True)
class SimultaneousResult:
    """Everything one structured recording yields: LTI, RTV and SDTI."""

    linear: TransferEstimate
    short_irs: np.ndarray  # shape (3, N/4)
    rtv: RepetitionResult
    sdti: SdtiResult


@dataclass(frozen=True)
class PolarityPairResult:
    """Joint result of measuring with a test signal and its negation.

    ``combined`` holds the estimates from the polarity-averaged transfer,
    in which even-order distortion cancels exactly, so its SDTI level
    responds to odd-order nonlinearity only. ``even_ir`` is the
    half-difference of the two long impulse responses: the even-order
    signature that the averaging removed.
    """

    combined: SimultaneousResult
    even_ir: np.ndarray


@dataclass(frozen=True)
class SafeguardConfig:
    """Threshold rules for safeguarding an excitation spectrum.

    The per-bin threshold is the maximum of: the fractional-octave-smoothed
    magnitude minus ``relative_db``, the global peak minus
    ``absolute_floor_db``, and the measured noise magnitude when given.
    Below ``low_freq_limit_hz`` only the absolute floor applies, so the
    subsonic region is not boosted.
    """

    relative_db: float = 20.0
    absolute_floor_db: float = 80.0
    low_freq_limit_hz: float = 20.0
    smoothing_width: float = 1.0 / 3.0

    def __post_init__(self):
        if self.relative_db <= 0 or self.absolute_floor_db <= 0:
            raise ValueError("threshold depths must be positive dB values")
        if self.low_freq_limit_hz < 0:
            raise ValueError("low_freq_limit_hz must be non-negative")
        if self.smoothing_width <= 0:
            raise ValueError("smoothing_width must be positive")


def _next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


def _frame_spectra(frames: np.ndarray, threads: int) -> np.ndarray:
    threads = max(int(threads), 1)
    if threads == 1 or frames.shape[0] < 2 * threads:
        return np.fft.fft(frames, axis=1)
    out = np.empty(frames.shape, dtype=complex)
    blocks = np.array_split(np.arange(frames.shape[0]), threads)

    def work(rows: np.ndarray) -> None:
        out[rows] = np.fft.fft(frames[rows], axis=1)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, blocks))
    return out


# ---------------------------------------------------------------------------
# stage 1: single presentation, linear convolution model
# ---------------------------------------------------------------------------


def estimate_lti_linear(
    excitation: Signal, response: Signal, max_ir_len: int
) -> TransferEstimate:
    """Transfer estimate from one presentation of a finite excitation.

    Both signals are zero-padded to a power of two covering the full linear
    convolution (len(x) + max_ir_len - 1) so no wrap-around occurs. Bins
    where the excitation magnitude vanishes raise
    :class:`~acoustimate.signal_core.ZeroDenominatorError`; safeguard the
    excitation first. The impulse response is truncated to ``max_ir_len``.
    """
    if max_ir_len < 1:
        raise ValueError("max_ir_len must be at least 1")
    if excitation.sample_rate != response.sample_rate:
        raise ValueError("excitation and response sample rates differ")
    L = _next_pow2(max(len(excitation) + max_ir_len - 1, len(response), 2))
    X = np.fft.fft(excitation.samples, n=L)
    bad = np.flatnonzero(np.abs(X) < _DENOM_MIN)
    if bad.size:
        raise ZeroDenominatorError(bad, context="linear transfer estimation")
    H = np.fft.fft(response.samples, n=L) / X
    transfer = Spectrum(H, excitation.sample_rate)
    return TransferEstimate(
        transfer=transfer,
        impulse_response=np.fft.ifft(H).real[:max_ir_len],
        method="linear",
    )


# ---------------------------------------------------------------------------
# stage 2: periodic excitation
# ---------------------------------------------------------------------------


def estimate_lti_periodic(reference: PeriodicSignal, observed_period) -> TransferEstimate:
    """Transfer estimate from one steady-state period (cyclic model).

    No zero-padding is involved: the observed period is divided by the
    reference period bin by bin. The estimate is invariant to a cyclic
    rotation applied to both signals.
    """
    observed = (
        observed_period.period
        if isinstance(observed_period, PeriodicSignal)
        else np.asarray(observed_period, dtype=float)
    )
    N = len(reference)
    if observed.size != N:
        raise ValueError(
            f"observed period has {observed.size} samples, reference has {N}"
        )
    num = Spectrum(np.fft.fft(observed), reference.sample_rate)
    den = Spectrum(np.fft.fft(reference.period), reference.sample_rate)
    transfer = spectral_divide(num, den)
    return TransferEstimate(
        transfer=transfer, impulse_response=idft(transfer), method="periodic"
    )


def estimate_with_repetitions(
    reference: PeriodicSignal,
    acquired,
    discard_head: int = 1,
    threads: int = 1,
) -> RepetitionResult:
    """Average per-period transfer estimates and measure their spread.

    Parameters
    ----------
    reference : PeriodicSignal
        The emitted period.
    acquired : Signal or array_like
        The recording; the first ``discard_head`` periods are dropped
        (startup transient) and any trailing partial period is ignored.
    discard_head : int
        Number of leading periods to discard.
    threads : int
        Worker threads for the per-period transforms. The result is
        identical for any value.

    Returns
    -------
    RepetitionResult
        ``mean_transfer`` is the per-bin average; ``rtv_level`` is the
        one-sided per-bin sample variance across periods, which estimates
        the random / time-varying contamination power.
    """
    if discard_head < 0:
        raise ValueError("discard_head must be non-negative")
    samples = acquired.samples if isinstance(acquired, Signal) else np.asarray(acquired, float)
    N = len(reference)
    start = discard_head * N
    usable = (samples.size - start) // N
    if usable < 2:
        raise InsufficientDataError(
            f"need at least 2 whole periods after discarding {discard_head}; "
            f"got {max(usable, 0)} from {samples.size} samples (N = {N})"
        )
    S = np.fft.fft(reference.period)
    bad = np.flatnonzero(np.abs(S) < _DENOM_MIN)
    if bad.size:
        raise ZeroDenominatorError(bad, context="periodic transfer estimation")
    frames = samples[start : start + usable * N].reshape(usable, N)
    per_period = _frame_spectra(frames, threads) / S
    mean = per_period.mean(axis=0)
    deviation_power = np.square(np.abs(per_period - mean)).sum(axis=0) / (usable - 1)
    return RepetitionResult(
        mean_transfer=Spectrum(mean, reference.sample_rate),
        rtv_level=deviation_power[: N // 2 + 1],
        periods_used=int(usable),
    )


# ---------------------------------------------------------------------------
# stage 3: signal-dependent component
# ---------------------------------------------------------------------------


def virtual_target(q: int, period_len: int) -> np.ndarray:
    """Pulse train picking structured element q out of a measurement.

    A length-N sequence with HADAMARD4[q-1, r-1] at offsets (r-1)*N/4.
    Convolving the averaged impulse response with this (cyclically) isolates
    the bins carrying element q and lays its short response in the first
    quarter period.
    """
    if q not in (1, 2, 3):
        raise ValueError(f"q must be 1, 2 or 3, got {q}")
    N = int(period_len)
    if N < 4 or N % 4 != 0:
        raise ValueError(f"period length must be a positive multiple of 4, got {N}")
    target = np.zeros(N)
    target[np.arange(4) * (N // 4)] = HADAMARD4[q - 1]
    return target


def _simultaneous_from_mean(rep: RepetitionResult) -> SimultaneousResult:
    # shared tail of the one-shot and polarity-paired estimators
    mean_bins = rep.mean_transfer.bins
    N = mean_bins.size
    h_long = np.fft.ifft(mean_bins).real
    quarter = N // 4
    shorts = np.empty((3, quarter))
    for q in (1, 2, 3):
        selector = np.fft.fft(virtual_target(q, N))
        shorts[q - 1] = np.fft.ifft(selector * mean_bins).real[:quarter]
    deviations = shorts - h_long[:quarter]
    sdti_level = deviations.var(axis=0, ddof=1)
    sdti_bins = np.fft.rfft(deviations, n=N, axis=1)
    sdti = SdtiResult(
        mean_ir=shorts.mean(axis=0),
        sdti_level=sdti_level,
        source="orthogonal",
        sdti_bins=sdti_bins.var(axis=0, ddof=1),
    )
    linear = TransferEstimate(
        transfer=rep.mean_transfer, impulse_response=h_long, method="simultaneous"
    )
    return SimultaneousResult(linear=linear, short_irs=shorts, rtv=rep, sdti=sdti)


def estimate_simultaneous(
    signal: StructuredTestSignal,
    acquired,
    discard_head: int = 1,
    threads: int = 1,
) -> SimultaneousResult:
    """LTI + RTV + SDTI from one recording of a structured test signal.

    The averaged per-period transfer gives the long impulse response and the
    per-bin variance across periods gives the RTV level (as in
    :func:`estimate_with_repetitions`). Multiplying the averaged transfer by
    each virtual target's spectrum and keeping the first quarter period
    yields three short impulse responses that would be identical for a
    purely LTI system; their sample variance is the SDTI level.

    A single recording responds to even- and odd-order distortion alike.
    To separate the two, record the negated signal as well and use
    :func:`estimate_polarity_pair`.
    """
    N = signal.period.size
    if N % 4 != 0:
        raise ValueError("structured period length must be a multiple of 4")
    rep = estimate_with_repetitions(signal.as_periodic, acquired, discard_head, threads)
    return _simultaneous_from_mean(rep)


def estimate_polarity_pair(
    signal: StructuredTestSignal,
    acquired_pos,
    acquired_neg,
    discard_head: int = 1,
    threads: int = 1,
) -> PolarityPairResult:
    """Structured estimation from recordings of the signal and its negation.

    Even-order distortion produces the same response for both polarities
    while the linear and odd-order parts flip sign, so averaging the two
    per-polarity transfer estimates cancels the even-order residue exactly
    and the half-difference isolates it. The combined result therefore
    carries an SDTI level blind to even-symmetric nonlinearity; inspect
    ``even_ir`` (or call :func:`even_component` on the two long responses)
    to detect that part.
    """
    N = signal.period.size
    if N % 4 != 0:
        raise ValueError("structured period length must be a multiple of 4")
    reference = signal.as_periodic
    rep_pos = estimate_with_repetitions(reference, acquired_pos, discard_head, threads)
    negated = PeriodicSignal(-reference.period, reference.sample_rate)
    rep_neg = estimate_with_repetitions(negated, acquired_neg, discard_head, threads)
    mean_bins = 0.5 * (rep_pos.mean_transfer.bins + rep_neg.mean_transfer.bins)
    even_ir = np.fft.ifft(
        0.5 * (rep_pos.mean_transfer.bins - rep_neg.mean_transfer.bins)
    ).real
    rep = RepetitionResult(
        mean_transfer=Spectrum(mean_bins, reference.sample_rate),
        rtv_level=0.5 * (rep_pos.rtv_level + rep_neg.rtv_level),
        periods_used=rep_pos.periods_used + rep_neg.periods_used,
    )
    return PolarityPairResult(combined=_simultaneous_from_mean(rep), even_ir=even_ir)


def serial_sdti(impulse_responses) -> SdtiResult:
    """SDTI from impulse responses measured with different test signals.

    Element-wise mean and sample variance across the inputs (at least two,
    equal lengths). Purely LTI measurements give zero variance; any
    signal-dependent deviation survives averaging within each measurement
    and shows up here.
    """
    irs = np.asarray([np.asarray(ir, dtype=float) for ir in impulse_responses])
    if irs.ndim != 2 or irs.shape[0] < 2:
        raise InsufficientDataError(
            "serial SDTI needs at least two impulse responses of equal length"
        )
    return SdtiResult(
        mean_ir=irs.mean(axis=0),
        sdti_level=irs.var(axis=0, ddof=1),
        source="serial",
        sdti_bins=np.fft.rfft(irs, axis=1).var(axis=0, ddof=1),
    )


def even_component(h_pos: np.ndarray, h_neg: np.ndarray) -> np.ndarray:
    """Even-order nonlinearity signature from a sign-flipped measurement pair.

    ``h_pos`` and ``h_neg`` are impulse responses estimated with a test
    signal and its negation. Their half-difference isolates even-symmetric
    distortion; the half-sum holds the linear and odd-order parts and is
    the polarity-robust response estimate used by
    :func:`estimate_polarity_pair`.
    """
    h_pos = np.asarray(h_pos, dtype=float)
    h_neg = np.asarray(h_neg, dtype=float)
    if h_pos.shape != h_neg.shape:
        raise ValueError("the two impulse responses must have equal length")
    return 0.5 * (h_pos - h_neg)


# ---------------------------------------------------------------------------
# safeguarding
# ---------------------------------------------------------------------------


def safeguard_threshold(
    spectrum: Spectrum,
    noise_power: np.ndarray | None = None,
    config: SafeguardConfig = SafeguardConfig(),
) -> np.ndarray:
    """One-sided per-bin magnitude threshold for safeguarding.

    See :class:`SafeguardConfig` for the rules. ``noise_power`` is an
    optional one-sided power spectrum of the background noise; its
    magnitude becomes an additional lower bound so safeguarded bins are not
    buried under the noise.
    """
    bins = spectrum.bins
    L = bins.size
    if L % 2 != 0:
        raise ValueError("safeguarding expects an even DFT length")
    half_len = L // 2 + 1
    magnitude = np.abs(bins[:half_len])
    peak = float(magnitude.max())
    if peak == 0.0:
        raise ValueError("cannot derive a threshold from an all-zero spectrum")
    smoothed = np.sqrt(third_octave_smooth(np.square(magnitude), config.smoothing_width))
    theta = np.maximum(
        smoothed * 10.0 ** (-config.relative_db / 20.0),
        peak * 10.0 ** (-config.absolute_floor_db / 20.0),
    )
    if noise_power is not None:
        noise_power = np.asarray(noise_power, dtype=float)
        if noise_power.shape != (half_len,):
            raise ValueError(f"noise_power must have {half_len} one-sided bins")
        if np.any(noise_power < 0):
            raise ValueError("noise_power must be non-negative")
        theta = np.maximum(theta, np.sqrt(noise_power))
    low = np.arange(half_len) * (spectrum.sample_rate / L) < config.low_freq_limit_hz
    theta[low] = peak * 10.0 ** (-config.absolute_floor_db / 20.0)
    return theta


def safeguard(spectrum: Spectrum, threshold: np.ndarray) -> Spectrum:
    """Lift sub-threshold bins to the threshold magnitude, keeping phases.

    Bins with zero magnitude become the (real, positive) threshold itself.
    The operation is idempotent and preserves conjugate symmetry, and bins
    already at or above the threshold pass through bit-identically.
    """
    bins = spectrum.bins
    L = bins.size
    if L % 2 != 0:
        raise ValueError("safeguarding expects an even DFT length")
    half_len = L // 2 + 1
    threshold = np.asarray(threshold, dtype=float)
    if threshold.shape != (half_len,):
        raise ValueError(f"threshold must have {half_len} one-sided bins")
    if np.any(threshold[1:] <= 0):
        raise ValueError("threshold must be positive for bins k >= 1")
    half = bins[:half_len].copy()
    magnitude = np.abs(half)
    zero = magnitude == 0.0
    # the 1e-12 slack keeps a lifted bin (whose magnitude lands within
    # rounding of the threshold) from being rescaled again on re-application
    weak = (magnitude > 0.0) & (magnitude < threshold * (1.0 - 1e-12))
    half[zero] = threshold[zero]
    half[weak] *= threshold[weak] / magnitude[weak]
    return Spectrum(mirror_spectrum(half, L), spectrum.sample_rate)


def safeguarded_transfer(observed: Spectrum, safeguarded_reference: Spectrum) -> Spectrum:
    """Per-bin transfer ratio against a safeguarded reference spectrum."""
    return spectral_divide(observed, safeguarded_reference)
