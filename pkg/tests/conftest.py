"""Shared helpers: deliberately naive reference implementations.

The oracles here trade speed for obviousness (direct-definition DFT,
per-bin smoothing loops) so the fast library code has something
independent to be checked against.
"""

import numpy as np


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(L^2) direct-definition DFT. Small inputs only."""
    x = np.asarray(x, dtype=complex)
    L = x.size
    n = np.arange(L)
    return np.array([np.sum(x * np.exp(-2j * np.pi * k * n / L)) for k in range(L)])


def naive_octave_smooth(power: np.ndarray, width: float) -> np.ndarray:
    """Per-bin loop version of fractional-octave smoothing.

    Bin k >= 1 becomes the mean of bins j with
    k * 2**(-width/2) <= j <= k * 2**(+width/2), band edges included.
    """
    power = np.asarray(power, dtype=float)
    out = power.copy()
    half = 2.0 ** (width / 2.0)
    for k in range(1, power.size):
        lo = int(np.ceil(k / half - 1e-12))
        hi = int(np.floor(k * half + 1e-12))
        lo = min(max(lo, 0), power.size - 1)
        hi = min(max(hi, 0), power.size - 1)
        out[k] = power[lo : hi + 1].mean()
    return out


def random_fir(seed: int, taps: int) -> np.ndarray:
    """Reproducible test FIR, independent of the package's synthesizer."""
    rng = np.random.default_rng(seed)
    ir = rng.standard_normal(taps) * np.exp(-np.linspace(0.0, 5.0, taps))
    return ir / np.max(np.abs(ir))


def cyclic_convolve(period: np.ndarray, ir: np.ndarray) -> np.ndarray:
    """Steady-state response of one period: circular convolution oracle."""
    N = period.size
    out = np.zeros(N)
    for m, g in enumerate(np.asarray(ir, dtype=float)):
        out += g * np.roll(period, m)
    return out
