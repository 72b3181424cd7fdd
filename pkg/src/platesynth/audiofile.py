"""Mono 32-bit float WAV input/output."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile


def write_wav(path, samples: np.ndarray, sample_rate: float):
    """Write mono float32 WAV; float samples are stored unclipped."""
    x = np.asarray(samples, dtype=np.float32)
    if x.ndim != 1:
        raise ValueError("expected a mono 1-D signal")
    if not np.all(np.isfinite(x)):
        raise ValueError("refusing to write non-finite samples")
    wavfile.write(path, int(round(sample_rate)), x)


def read_wav(path) -> tuple[float, np.ndarray]:
    """Read a mono float32 WAV back as (sample_rate, float64 samples)."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise ValueError("expected a mono WAV file")
    if data.dtype != np.float32:
        raise ValueError(f"expected 32-bit float samples, got {data.dtype}")
    return float(rate), data.astype(np.float64)
