"""Ground-truth responses and reference audio from modal data.

Each mode becomes a discrete two-pole resonator by impulse invariance:
pole radius e^(-sigma/sr), pole angle omega/sr, driven with amplitude
Phi_k(pos)^2 (driving-point response at the excitation node).  Modes at
or above Nyquist are dropped.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.signal

from ..resonator import DB_FLOOR, MagnitudeResponse
from ..schedule import ModulationSchedule
from .fem import (DEFAULT_EXTENT, DEFAULT_THICKNESS, MaterialParams,
                  ModalData, rescale_modal, solve_modes)
from .shape import ShapeGrid


def mode_resonators(modal: ModalData, pos, sample_rate: float):
    """Per-mode (amps, r, theta) at the node nearest pos; Nyquist-safe."""
    x, y = float(pos[0]), float(pos[1])
    node = modal.nearest_interior_node(x, y)
    amps = modal.shapes[:, node] ** 2
    theta = modal.omega / sample_rate
    r = np.exp(-modal.sigma / sample_rate)
    keep = theta < np.pi
    return amps * keep, r, theta, node


def _check_inside(grid: ShapeGrid | None, pos):
    if grid is not None and not grid.contains(float(pos[0]), float(pos[1])):
        warnings.warn(f"position {tuple(pos)} outside shape; nearest interior "
                      "node used", stacklevel=3)


def target_response(modal: ModalData, pos, freqs: np.ndarray,
                    sample_rate: float = 44100.0,
                    grid: ShapeGrid | None = None) -> MagnitudeResponse:
    """Driving-point magnitude response on freqs, dB-clamped."""
    _check_inside(grid, pos)
    amps, r, theta, _ = mode_resonators(modal, pos, sample_rate)
    z1 = np.exp(-2j * np.pi * np.asarray(freqs, dtype=np.float64) / sample_rate)
    total = np.zeros(len(freqs), dtype=np.complex128)
    for k in range(modal.n_modes):
        if amps[k] == 0.0:
            continue
        num = amps[k] * r[k] * np.sin(theta[k]) * z1
        den = 1.0 - 2.0 * r[k] * np.cos(theta[k]) * z1 + (r[k] ** 2) * z1 * z1
        total += num / den
    mag = np.abs(total)
    db = 20.0 * np.log10(np.maximum(mag, 10.0 ** (DB_FLOOR / 20.0)))
    return MagnitudeResponse(freqs=np.asarray(freqs, dtype=np.float64), db=db)


def render_reference(modal: ModalData, excitation: np.ndarray, pos,
                     sample_rate: float = 44100.0,
                     grid: ShapeGrid | None = None) -> np.ndarray:
    """Excitation filtered through the parallel modal resonators."""
    _check_inside(grid, pos)
    x = np.asarray(excitation, dtype=np.float64)
    amps, r, theta, _ = mode_resonators(modal, pos, sample_rate)
    out = np.zeros_like(x)
    for k in range(modal.n_modes):
        if amps[k] == 0.0:
            continue
        b = [0.0, amps[k] * r[k] * np.sin(theta[k])]
        a = [1.0, -2.0 * r[k] * np.cos(theta[k]), r[k] ** 2]
        out += scipy.signal.lfilter(b, a, x)
    return out


def render_modulated_reference(grid: ShapeGrid, schedule: ModulationSchedule,
                               pos, excitation: np.ndarray, hop: int,
                               sample_rate: float = 44100.0,
                               base_material: MaterialParams | None = None,
                               thickness: float = DEFAULT_THICKNESS,
                               physical_size: float = DEFAULT_EXTENT,
                               n_modes: int = 32,
                               method: str = "auto") -> np.ndarray:
    """Overlap-add reference under a time-varying material.

    One eigensolve for the base material; every hop's system is an exact
    material rescale of it.  Per hop the FULL excitation is filtered by
    the frozen system, a periodic Hann window (length 2·hop, 50% overlap)
    selects its segment, and the window sum is normalized away, so a
    constant schedule reproduces render_reference exactly.
    """
    if hop < 1:
        raise ValueError("hop must be >= 1")
    win_len = 2 * hop
    x = np.asarray(excitation, dtype=np.float64)
    n = len(x)
    if n == 0:
        return np.zeros(0)

    base = MaterialParams.default() if base_material is None else base_material
    base_modal = solve_modes(grid, base, thickness=thickness,
                             physical_size=physical_size, n_modes=n_modes,
                             method=method)

    ramp = np.arange(win_len, dtype=np.float64)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * ramp / win_len)  # periodic Hann

    out = np.zeros(n)
    norm = np.zeros(n)
    first_hop = -1  # half-covers the opening hop so the window sum is 1 there
    last_hop = (n - 1) // hop
    for i in range(first_hop, last_hop + 1):
        start = i * hop
        stop = min(start + win_len, n)
        t = max(start, 0) / sample_rate
        mat_i = schedule.material_at(t, base)
        pos_i = schedule.position_at(t, pos)
        modal_i = rescale_modal(base_modal, base, mat_i, thickness_old=thickness)
        seg = render_reference(modal_i, x[:stop], pos_i, sample_rate)
        lo = max(start, 0)
        w = window[lo - start:stop - start]
        out[lo:stop] += w * seg[lo:stop]
        norm[lo:stop] += w
    np.divide(out, norm, out=out, where=norm > 1e-12)
    return out
