"""Mono WAV input and output for the measurement pipeline.

Three sample formats are supported: PCM16 for interchange with ordinary
audio tools, IEEE float32 as the default emission format, and IEEE float64
for round trips that must preserve the estimator's numerical headroom.
Everything is mono; channel handling and resampling are out of scope.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .signal_core import Signal

WAV_FORMATS = ("pcm16", "float32", "float64")

_PCM16_SCALE = 32767.0


class AudioFormatError(ValueError):
    """The file or requested format is outside the supported WAV subset."""


def write_wav(path, samples, sample_rate: float, fmt: str = "float32") -> Path:
    """Write a mono WAV file in one of :data:`WAV_FORMATS`.

    PCM16 requires samples within [-1, 1]; exceeding that range raises
    instead of silently clipping.
    """
    if fmt not in WAV_FORMATS:
        raise AudioFormatError(f"unsupported WAV format {fmt!r}; pick one of {WAV_FORMATS}")
    data = np.asarray(samples, dtype=float)
    if data.ndim != 1:
        raise AudioFormatError("only mono signals can be written")
    if not np.all(np.isfinite(data)):
        raise AudioFormatError("samples must be finite")
    rate = int(round(sample_rate))
    if rate <= 0:
        raise AudioFormatError(f"sample rate must be positive, got {sample_rate}")
    if fmt == "pcm16":
        peak = float(np.max(np.abs(data))) if data.size else 0.0
        if peak > 1.0:
            raise AudioFormatError(
                f"PCM16 needs samples within [-1, 1]; peak is {peak:.6g}"
            )
        encoded = np.round(data * _PCM16_SCALE).astype(np.int16)
    elif fmt == "float32":
        encoded = data.astype(np.float32)
    else:
        encoded = data
    path = Path(path)
    wavfile.write(path, rate, encoded)
    return path


def read_wav(path) -> Signal:
    """Read a mono WAV file into a float :class:`Signal`.

    PCM16 samples are scaled to [-1, 1]; float data passes through.
    """
    rate, data = wavfile.read(Path(path))
    if data.ndim != 1:
        raise AudioFormatError(f"{path}: only mono WAV files are supported")
    if data.dtype == np.int16:
        samples = data.astype(float) / _PCM16_SCALE
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(float)
    else:
        raise AudioFormatError(
            f"{path}: unsupported sample type {data.dtype}; "
            "use PCM16, float32 or float64"
        )
    return Signal(samples, float(rate))
