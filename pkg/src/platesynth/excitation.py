"""Excitation sources: impact impulses, drawn impulses, surface textures,
and the scrape force model.

The scrape force combines a curvature term and a slope term along the
pointer path over a height field S:

    F_v = m_p (S_xx vx^2 + S_yy vy^2)
    F_h = vx S_x + vy S_y
    F   = mix_v F_v + mix_h F_h

Positions are window coordinates in [0,1]^2, velocities window-widths/s,
and texture derivatives are taken in grid-cell units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pgmio import read_pgm

MAX_DRAWN_SAMPLES = 8192


def bessel_i0(x: float) -> float:
    """Modified Bessel I0 by power series, 1e-12 relative convergence."""
    x = float(x)
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-12 * total:
            return total
        if k > 1000:  # series converges long before this for sane beta
            raise ValueError(f"I0 series did not converge for x={x}")


@dataclass(frozen=True)
class ImpulseSpec:
    beta_K: float = 6.0
    length_N: int = 65
    amplitude: float = 1.0

    def __post_init__(self):
        if self.length_N < 2:
            raise ValueError("impulse length must be >= 2 samples")
        if not (np.isfinite(self.beta_K) and self.beta_K >= 0):
            raise ValueError("beta_K must be finite and >= 0")


def kaiser_impulse(spec: ImpulseSpec) -> np.ndarray:
    n = np.arange(spec.length_N, dtype=np.float64)
    t = 2.0 * n / (spec.length_N - 1) - 1.0
    arg = spec.beta_K * np.sqrt(np.maximum(1.0 - t * t, 0.0))
    denom = bessel_i0(spec.beta_K)
    w = np.array([bessel_i0(a) for a in arg]) / denom
    return spec.amplitude * w


def draw_impulse(samples: Sequence[float]) -> np.ndarray:
    x = np.asarray(list(samples), dtype=np.float64)
    if x.ndim != 1 or not (1 <= len(x) <= MAX_DRAWN_SAMPLES):
        raise ValueError(f"drawn impulse must be 1..{MAX_DRAWN_SAMPLES} samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("drawn impulse must be finite")
    peak = np.abs(x).max()
    if peak == 0.0:
        raise ValueError("drawn impulse is all zero")
    return x / peak


class SurfaceTexture:
    """Immutable height field with precomputed derivative grids.

    Derivatives are central differences in grid-index units, replicated
    at the edges, and sampled by bilinear interpolation over [0,1]^2.
    """

    def __init__(self, heights: np.ndarray, scale: float | None = None):
        s = np.ascontiguousarray(heights, dtype=np.float64)
        if s.ndim != 2 or min(s.shape) < 4:
            raise ValueError("texture must be 2D, at least 4x4")
        if not np.all(np.isfinite(s)):
            raise ValueError("texture heights must be finite")
        h, w = s.shape
        self.heights = s
        self.scale = 0.5 / w if scale is None else float(scale)

        def central(a, axis):
            d = np.zeros_like(a)
            sl = [slice(None)] * 2
            lo = [slice(None)] * 2
            hi = [slice(None)] * 2
            sl[axis] = slice(1, -1)
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            d[tuple(sl)] = 0.5 * (a[tuple(hi)] - a[tuple(lo)])
            edge0, edge1 = [slice(None)] * 2, [slice(None)] * 2
            edge0[axis] = 0
            edge1[axis] = -1
            inner0, inner1 = [slice(None)] * 2, [slice(None)] * 2
            inner0[axis] = 1
            inner1[axis] = -2
            d[tuple(edge0)] = d[tuple(inner0)]
            d[tuple(edge1)] = d[tuple(inner1)]
            return d

        def second(a, axis):
            d = np.zeros_like(a)
            sl = [slice(None)] * 2
            lo = [slice(None)] * 2
            hi = [slice(None)] * 2
            sl[axis] = slice(1, -1)
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            d[tuple(sl)] = a[tuple(hi)] - 2.0 * a[tuple(sl)] + a[tuple(lo)]
            edge0, edge1 = [slice(None)] * 2, [slice(None)] * 2
            edge0[axis] = 0
            edge1[axis] = -1
            inner0, inner1 = [slice(None)] * 2, [slice(None)] * 2
            inner0[axis] = 1
            inner1[axis] = -2
            d[tuple(edge0)] = d[tuple(inner0)]
            d[tuple(edge1)] = d[tuple(inner1)]
            return d

        self._sx = central(s, 1)
        self._sy = central(s, 0)
        self._sxx = second(s, 1)
        self._syy = second(s, 0)
        for a in (self.heights, self._sx, self._sy, self._sxx, self._syy):
            a.setflags(write=False)

    @classmethod
    def from_pgm(cls, path, scale: float | None = None) -> "SurfaceTexture":
        arr, maxval = read_pgm(path)
        s = arr.astype(np.float64) / maxval
        std = s.std()
        if std > 0:
            s = (s - s.mean()) / std
        else:
            s = s - s.mean()
        return cls(s, scale=scale)

    def _bilinear(self, field: np.ndarray, x, y):
        h, w = field.shape
        u = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0) * (w - 1)
        v = np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0) * (h - 1)
        i0 = np.minimum(u.astype(np.int64), w - 2)
        j0 = np.minimum(v.astype(np.int64), h - 2)
        fu = u - i0
        fv = v - j0
        f00 = field[j0, i0]
        f10 = field[j0, i0 + 1]
        f01 = field[j0 + 1, i0]
        f11 = field[j0 + 1, i0 + 1]
        return (f00 * (1 - fu) * (1 - fv) + f10 * fu * (1 - fv)
                + f01 * (1 - fu) * fv + f11 * fu * fv)

    def derivatives(self, x, y, warn_outside: bool = True):
        """(S_x, S_y, S_xx, S_yy) at window coordinates (x, y)."""
        if warn_outside:
            xa, ya = np.asarray(x), np.asarray(y)
            if np.any(xa < 0) or np.any(xa > 1) or np.any(ya < 0) or np.any(ya > 1):
                warnings.warn("texture coordinates outside [0,1], clamped",
                              stacklevel=2)
        return (self._bilinear(self._sx, x, y),
                self._bilinear(self._sy, x, y),
                self._bilinear(self._sxx, x, y),
                self._bilinear(self._syy, x, y))


def surface_derivatives(tex: SurfaceTexture, x, y):
    return tex.derivatives(x, y)


def fractal_texture(roughness_H: float, size: int = 256,
                    seed: int = 0) -> SurfaceTexture:
    """Spectral-synthesis fractal noise, amplitude ~ f^-(H+1)."""
    if size < 4 or size & (size - 1):
        raise ValueError("texture size must be a power of two >= 4")
    if not (0.0 <= roughness_H <= 1.0):
        raise ValueError("roughness must be in [0, 1]")
    rng = np.random.default_rng(seed)
    fx = np.fft.fftfreq(size)[None, :]
    fy = np.fft.fftfreq(size)[:, None]
    f = np.hypot(fx, fy)
    amp = np.zeros_like(f)
    nz = f > 0
    amp[nz] = f[nz] ** -(roughness_H + 1.0)
    spectrum = amp * (rng.standard_normal((size, size))
                      + 1j * rng.standard_normal((size, size)))
    field = np.fft.ifft2(spectrum).real
    field -= field.mean()
    field /= field.std()
    return SurfaceTexture(field)


@dataclass(frozen=True)
class ScrapeState:
    """One control-rate sample of scraper state at time t (seconds)."""

    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    m_p: float = 0.01
    mix_v: float = 1.0
    mix_h: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.vx, self.vy, self.m_p,
                self.mix_v, self.mix_h, self.t)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("scrape state must be finite")
        if self.m_p <= 0:
            raise ValueError("scraper mass must be positive")


def scrape_force(tex: SurfaceTexture, trajectory: Sequence[ScrapeState],
                 sample_rate: float) -> np.ndarray:
    """Force signal along the trajectory, sampled at audio rate.

    Positions interpolate linearly between control-rate states and the
    velocities come from first differences of the interpolated path, so
    the carried vx/vy fields are informational only here.
    """
    states = list(trajectory)
    if not states:
        raise ValueError("empty scrape trajectory")
    times = np.array([s.t for s in states])
    if np.any(np.diff(times) <= 0):
        raise ValueError("trajectory timestamps must increase")
    if len(states) == 1:
        return np.zeros(0)

    t0, t1 = times[0], times[-1]
    n = int(round((t1 - t0) * sample_rate))
    if n <= 0:
        return np.zeros(0)
    ts = t0 + np.arange(n) / sample_rate

    xs = np.interp(ts, times, [s.x for s in states])
    ys = np.interp(ts, times, [s.y for s in states])
    vx = np.empty(n)
    vy = np.empty(n)
    vx[:-1] = np.diff(xs) * sample_rate
    vy[:-1] = np.diff(ys) * sample_rate
    vx[-1] = vx[-2] if n > 1 else 0.0
    vy[-1] = vy[-2] if n > 1 else 0.0

    # per-sample state scalars held from the previous breakpoint
    seg = np.minimum(np.searchsorted(times, ts, side="right") - 1,
                     len(states) - 1)
    m_p = np.array([s.m_p for s in states])[seg]
    mix_v = np.array([s.mix_v for s in states])[seg]
    mix_h = np.array([s.mix_h for s in states])[seg]

    sx, sy, sxx, syy = tex.derivatives(xs, ys, warn_outside=False)
    f_v = m_p * (sxx * vx ** 2 + syy * vy ** 2)
    f_h = vx * sx + vy * sy
    return mix_v * f_v + mix_h * f_h
