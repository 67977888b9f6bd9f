"""Synthetic measurement targets for verifying the estimation stack.

A target applies a memoryless polynomial nonlinearity, convolves with a
finite impulse response, multiplies in a slow sinusoidal gain drift, and
adds seeded background noise. Every product is a deterministic function of
the configuration, so expected estimates can be computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signal_core import PeriodicSignal, Signal, mirror_spectrum


class SimulationOverflowError(RuntimeError):
    """The simulated output left the finite range (nonlinearity too strong)."""


@dataclass(frozen=True)
class NoiseSpec:
    """Additive background noise: kind "white" or "pink", RMS ``level``."""

    kind: str = "white"
    level: float = 0.0

    def __post_init__(self):
        if self.kind not in ("white", "pink"):
            raise ValueError(f"noise kind must be 'white' or 'pink', got {self.kind!r}")
        if self.level < 0:
            raise ValueError("noise level must be non-negative")


@dataclass(frozen=True)
class DriftSpec:
    """Multiplicative gain drift: output scaled by 1 + depth*sin(2*pi*rate*t)."""

    depth: float = 0.0
    rate: float = 0.0  # Hz

    def __post_init__(self):
        if not 0 <= self.depth < 1:
            raise ValueError("drift depth must be in [0, 1)")
        if self.rate < 0:
            raise ValueError("drift rate must be non-negative")


@dataclass(frozen=True)
class SimTarget:
    """A simulated system: y = drift * (ir * (x + eps2*x^2 + eps3*x^3)) + noise."""

    ir: np.ndarray
    eps2: float = 0.0
    eps3: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    drift: DriftSpec = field(default_factory=DriftSpec)
    seed: int = 0

    def __post_init__(self):
        ir = np.asarray(self.ir, dtype=float)
        if ir.ndim != 1 or ir.size < 1:
            raise ValueError("SimTarget.ir must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(ir)):
            raise ValueError("SimTarget.ir must be finite")
        object.__setattr__(self, "ir", ir)


def synth_impulse_response(
    seed: int, decay_time: float, sample_rate: float, length: int
) -> np.ndarray:
    """Random FIR with an exponential decay envelope, -60 dB at ``decay_time``.

    Normalized so the largest-magnitude tap is +1 (a length-1 response is
    exactly [1.0]).
    """
    length = int(length)
    if length < 1:
        raise ValueError("length must be at least 1")
    if decay_time <= 0 or sample_rate <= 0:
        raise ValueError("decay_time and sample_rate must be positive")
    rng = np.random.default_rng(seed)
    t = np.arange(length) / sample_rate
    ir = rng.standard_normal(length) * np.exp(-math.log(1000.0) * t / decay_time)
    return ir / ir[np.argmax(np.abs(ir))]


def _pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    # white spectrum shaped by 1/sqrt(f): power falls 3 dB per octave
    n_fft = int(n)
    white = rng.standard_normal(n_fft)
    half = np.fft.rfft(white)
    half[1:] /= np.sqrt(np.arange(1, half.size))
    half[0] = 0.0
    pink = np.fft.irfft(half, n=n_fft)
    return pink / np.sqrt(np.mean(np.square(pink)))


def apply_target(target: SimTarget, excitation: Signal) -> Signal:
    """Run a signal through the simulated system.

    Output length is len(input) + len(ir) - 1 (full linear convolution).
    Noise is generated from the target's seed, so repeated calls with the
    same target and input produce identical output.
    """
    x = excitation.samples
    w = x + target.eps2 * np.square(x) + target.eps3 * x**3
    z = np.convolve(w, target.ir)
    if target.drift.depth > 0 and target.drift.rate > 0:
        t = np.arange(z.size) / excitation.sample_rate
        z = z * (1.0 + target.drift.depth * np.sin(2.0 * math.pi * target.drift.rate * t))
    if target.noise.level > 0:
        rng = np.random.default_rng(target.seed)
        if target.noise.kind == "white":
            z = z + target.noise.level * rng.standard_normal(z.size)
        else:
            z = z + target.noise.level * _pink_noise(rng, z.size)
    if not np.all(np.isfinite(z)):
        raise SimulationOverflowError(
            "simulated output is not finite; reduce the nonlinearity "
            "coefficients or the input level"
        )
    return Signal(z, excitation.sample_rate)


def synth_voice_like_period(
    seed: int, period_len: int, sample_rate: float, floor_db: float = -80.0
) -> PeriodicSignal:
    """Harmonic test period with deep spectral valleys, voice-like on average.

    A comb of harmonics of ~120 Hz, shaped by smooth resonances near 500,
    1500 and 2500 Hz, sits on a broadband floor ``floor_db`` below the
    strongest bin. The huge magnitude contrast between harmonics and floor
    is what makes raw spectral division fragile and safeguarding worthwhile.
    """
    N = int(period_len)
    if N < 64 or N % 2 != 0:
        raise ValueError(f"period length must be even and >= 64, got {N}")
    rng = np.random.default_rng(seed)
    half_len = N // 2 + 1
    freqs = np.arange(half_len) * (sample_rate / N)

    resonances = ((500.0, 220.0, 1.0), (1500.0, 260.0, 0.5), (2500.0, 320.0, 0.3))
    envelope = np.zeros(half_len)
    for center, width, gain in resonances:
        envelope += gain * np.exp(-0.5 * np.square((freqs - center) / width))

    magnitude = np.full(half_len, 10.0 ** (floor_db / 20.0))
    f0 = 120.0 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0))
    harmonics = (np.arange(1, int(0.45 * sample_rate / f0)) * f0 * N / sample_rate).round()
    harmonics = harmonics[(harmonics >= 1) & (harmonics < half_len - 1)].astype(int)
    magnitude[harmonics] = np.maximum(envelope[harmonics], magnitude[harmonics])

    phase = rng.uniform(-math.pi, math.pi, size=half_len)
    half = magnitude * np.exp(1j * phase)
    half[0] = 0.0
    half[-1] = abs(half[-1])
    period = np.fft.ifft(mirror_spectrum(half, N)).real
    return PeriodicSignal(period * (0.9 / np.max(np.abs(period))), sample_rate)
