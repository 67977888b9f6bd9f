"""Periodic weighting functions for analyzing one period of a repeating signal.

A weighting is built by convolving a cosine-series prototype window with a
rectangle exactly one period wide. Summing the weighting over all positions
that are one period apart then gives exactly one everywhere, so multiplying
a long record by the weighting and folding it back onto one period preserves
periodic content exactly while strongly attenuating asynchronous content.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

WRAP_TOL = 1e-12  # wrapped sums of a valid weighting stay within this of 1.0


@dataclass(frozen=True)
class WeightingFunction:
    """A spanning window whose period-wrapped sum is one at every offset."""

    coeffs: np.ndarray
    period_len: int
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.period_len < 1:
            raise ValueError("period_len must be positive")
        if self.samples.size % self.period_len != 0:
            raise ValueError("weighting length must be a multiple of period_len")
        wrapped = self.samples.reshape(-1, self.period_len).sum(axis=0)
        worst = float(np.max(np.abs(wrapped - 1.0)))
        if worst > WRAP_TOL:
            raise ValueError(
                f"wrapped sums deviate from 1 by {worst:.3e} (tolerance {WRAP_TOL:g})"
            )

    @property
    def span(self) -> int:
        return self.samples.size // self.period_len


def cosine_series_window(coeffs, width: int) -> np.ndarray:
    """Sample a cosine-series window symmetric about width/2.

    w[n] = sum_m coeffs[m] * cos(2*pi*m*n/width) for n in [0, width).
    With coeffs [0.5, -0.5] this is the raised cosine (zero at the ends,
    peak in the middle).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size < 1:
        raise ValueError("coeffs must be a non-empty 1-D sequence")
    if coeffs[0] <= 0:
        raise ValueError("coeffs[0] must be positive (it sets the window mean)")
    if width < 2:
        raise ValueError("width must be at least 2")
    n = np.arange(width)
    m = np.arange(coeffs.size)
    return (coeffs[:, None] * np.cos(2.0 * np.pi * np.outer(m, n) / width)).sum(axis=0)


def periodic_weighting(coeffs, period_len: int, span: int = 2) -> WeightingFunction:
    """Build a weighting spanning ``span`` periods from prototype coefficients.

    The cosine-series prototype of width (span-1)*period_len is convolved
    with a rectangle of width period_len; the result is normalized so that
    the sum over samples one period apart equals one at every offset.

    Parameters
    ----------
    coeffs : array_like
        Cosine-series coefficients of the prototype; coeffs[0] > 0.
    period_len : int
        Period length N of the signal the weighting will fold.
    span : int
        Number of periods the weighting covers (>= 2).
    """
    if span < 2:
        raise ValueError(f"invalid span {span}: a weighting must cover >= 2 periods")
    if period_len < 2:
        raise ValueError("period_len must be at least 2")
    proto_width = (span - 1) * period_len
    proto = cosine_series_window(coeffs, proto_width)
    # convolution with the period-wide rectangle, done as a sliding prefix sum
    prefix = np.concatenate([[0.0], np.cumsum(proto)])
    m = np.arange(span * period_len)
    hi = np.minimum(m, proto_width - 1) + 1
    lo = np.minimum(np.maximum(m - period_len + 1, 0), proto_width)
    samples = prefix[hi] - prefix[lo]
    # per-offset renormalization pins every wrapped sum to 1 exactly
    columns = samples.reshape(span, period_len)
    wrapped = columns.sum(axis=0)
    if np.any(wrapped <= 0):
        raise ValueError("prototype integrates to a non-positive value")
    samples = (columns / wrapped).reshape(-1)
    return WeightingFunction(coeffs=np.asarray(coeffs, float), period_len=period_len, samples=samples)


def fold_to_period(segment: np.ndarray, weighting: WeightingFunction) -> np.ndarray:
    """Weight a span-long segment and fold it onto a single period."""
    segment = np.asarray(segment, dtype=float)
    if segment.size != weighting.samples.size:
        raise ValueError(
            f"segment length {segment.size} does not match weighting length "
            f"{weighting.samples.size}"
        )
    weighted = segment * weighting.samples
    return weighted.reshape(-1, weighting.period_len).sum(axis=0)


def max_sidelobe_db(w, pad_factor: int = 32) -> float:
    """Largest side-lobe of a window or weighting, in dB relative to its peak.

    The main lobe is bounded by the first local minimum of the zero-padded
    DFT magnitude; everything beyond counts as side-lobe. Accepts a
    WeightingFunction or a bare sample array.
    """
    samples = w.samples if isinstance(w, WeightingFunction) else np.asarray(w, float)
    if samples.size < 2:
        raise ValueError("window must have at least 2 samples")
    n_fft = 1 << max(int(np.ceil(np.log2(samples.size * pad_factor))), 8)
    mag = np.abs(np.fft.rfft(samples, n=n_fft))
    peak_idx = int(np.argmax(mag))
    peak = mag[peak_idx]
    if peak == 0.0:
        raise ValueError("window has zero spectral peak")
    tail = mag[peak_idx:]
    rising = np.flatnonzero(np.diff(tail) > 0)
    if rising.size == 0:
        return float(-np.inf)  # magnitude decays monotonically: no side-lobe
    first_min = rising[0] + 1
    side = float(np.max(tail[first_min:]))
    if side == 0.0:
        return float(-np.inf)
    return 20.0 * np.log10(side / peak)


# ---------------------------------------------------------------------------
# coefficient optimization
# ---------------------------------------------------------------------------

# classic prototype ratios (relative to c0 = 1) used as starting simplexes
_FAMILY_STARTS = {
    2: [[-1.0]],
    3: [[-1.1936, 0.1979], [-1.0, 0.1]],
    4: [[-1.3397, 0.5004, -0.0764], [-1.2, 0.3, -0.05]],
}


def optimize_weighting(
    terms: int,
    period_len: int = 256,
    span: int = 2,
    budget: int = 2000,
    n_starts: int = 8,
    seed: int = 20260817,
) -> np.ndarray:
    """Search cosine-series coefficients minimizing the weighting side-lobe.

    Derivative-free simplex search over the terms-1 free ratios (coeffs[0]
    is fixed to 1; the objective is scale-invariant), multi-started from
    classic window families, the (terms-1)-term optimum, and seeded random
    perturbations. The total evaluation budget is split across starts.

    Returns the coefficient vector; achieved side-lobe level is monotone
    non-increasing in ``terms`` because each search starts from the previous
    optimum extended with a zero.
    """
    if terms < 1:
        raise ValueError("terms must be at least 1")
    if terms == 1:
        return np.array([1.0])

    def objective(ratios: np.ndarray) -> float:
        coeffs = np.concatenate([[1.0], ratios])
        try:
            w = periodic_weighting(coeffs, period_len, span)
        except ValueError:
            return 0.0  # degenerate prototype: as bad as no weighting at all
        return max_sidelobe_db(w)

    starts: list[np.ndarray] = []
    prev = optimize_weighting(terms - 1, period_len, span, budget, n_starts, seed)
    prev_ratios = prev[1:] / prev[0]
    starts.append(np.concatenate([prev_ratios, [0.0]]))
    for family in _FAMILY_STARTS.get(terms, []):
        starts.append(np.asarray(family, dtype=float))
    rng = np.random.default_rng(seed + terms)
    while len(starts) < n_starts:
        base = starts[len(starts) % 2]
        starts.append(base + rng.normal(scale=0.15, size=terms - 1))

    max_fev = max(budget // len(starts), 40)
    best_ratios, best_value = starts[0], objective(starts[0])
    for start in starts:
        result = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxfev": max_fev, "xatol": 1e-7, "fatol": 1e-4},
        )
        if result.fun < best_value:
            best_ratios, best_value = np.asarray(result.x), float(result.fun)
    if best_value >= -13.0:
        warnings.warn(
            f"weighting optimization for terms={terms} exhausted its budget at "
            f"{best_value:.1f} dB; returning best found",
            RuntimeWarning,
        )
    return np.concatenate([[1.0], best_ratios])
