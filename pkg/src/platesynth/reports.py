"""Evaluation reports: CSV emitters, spectral analysis helpers, figures.

Figures render through the Agg backend so every report path works
headless.  All CSV files use comma separation with a header row.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np
from scipy.signal import stft

from .engine import CoefficientLog, PositionSweep
from .resonator import DB_FLOOR, peak_match_errors, top_peak_frequencies


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_csv(path, header: list[str], rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def coefficient_log_csv(path, log: CoefficientLog):
    """One row per (tick, section): tick, t, section, g, b1, b2, a1, a2."""
    T, L, M, _ = log.coeffs.shape
    flat = log.coeffs.reshape(T, L * M, 5)

    def rows():
        for i in range(T):
            for s in range(L * M):
                g, b1, b2, a1, a2 = flat[i, s]
                yield (i, f"{log.times[i]:.6f}", s, repr(g), repr(b1),
                       repr(b2), repr(a1), repr(a2))

    write_csv(path, ["tick", "t", "section", "g", "b1", "b2", "a1", "a2"],
              rows())


def sweep_csv(path, sweep: PositionSweep):
    rows = (
        (repr(float(sweep.positions[i])), int(sweep.inside[i]),
         repr(float(sweep.mean_abs_gain[i])),
         repr(float(sweep.mean_zero_radius[i])),
         repr(float(sweep.mean_pole_radius[i])),
         repr(float(sweep.step_delta[i])))
        for i in range(len(sweep.positions))
    )
    write_csv(path, [sweep.axis, "inside", "mean_abs_gain",
                     "mean_zero_radius", "mean_pole_radius", "step_delta"],
              rows)


def loss_curve_csv(path, curve: np.ndarray):
    write_csv(path, ["step", "loss"],
              ((i, repr(float(v))) for i, v in enumerate(curve)))


# ---------------------------------------------------------------------------
# Spectral analysis
# ---------------------------------------------------------------------------

def spectrogram(x: np.ndarray, sample_rate: float, n_fft: int = 2048,
                hop: int = 256):
    """Log-magnitude spectrogram in dB, clamped at DB_FLOOR.

    Returns (freqs, times, db) with db shaped (n_freqs, n_frames).
    """
    f, t, z = stft(np.asarray(x, dtype=np.float64), fs=sample_rate,
                   nperseg=n_fft, noverlap=n_fft - hop, padded=False,
                   boundary=None)
    mag = np.abs(z)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    return f, t, np.maximum(db, DB_FLOOR)


def log_spectrogram_similarity(db_a: np.ndarray, db_b: np.ndarray) -> float:
    """Cosine similarity of two dB spectrograms on a common grid.

    Both are shifted so the dB floor maps to zero, so silent cells
    contribute nothing and the statistic measures where energy sits
    rather than how much shared background the two matrices have.
    """
    if db_a.shape != db_b.shape:
        raise ValueError(f"spectrogram shapes differ: {db_a.shape} vs {db_b.shape}")
    a = (db_a - DB_FLOOR).ravel()
    b = (db_b - DB_FLOOR).ravel()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        return 1.0 if np.array_equal(a, b) else 0.0
    return float(a @ b / denom)


def peak_frequency_track(db: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    """Strongest-bin frequency per frame of a (n_freqs, n_frames) dB map."""
    return freqs[np.argmax(db, axis=0)]


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)


def fig_loss_curve(path, curve: np.ndarray):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(np.arange(len(curve)), curve, lw=0.8)
    ax.set_xlabel("step")
    ax.set_ylabel("spectral loss (dB$^2$)")
    ax.grid(True, alpha=0.3)
    _save(fig, path)


def fig_response_overlay(path, freqs: np.ndarray, target_db: np.ndarray,
                         pred_db: np.ndarray, title: str = ""):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.semilogx(freqs, target_db, lw=1.0, label="reference")
    ax.semilogx(freqs, pred_db, lw=1.0, ls="--", label="estimate")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("magnitude (dB)")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def fig_spectrogram_pair(path, spec_a, spec_b, labels=("estimate", "reference"),
                         similarity: float | None = None, fmax: float | None = None):
    """Two aligned spectrograms; spec_* are (freqs, times, db) triples."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, (f, t, db), label in zip(axes, (spec_a, spec_b), labels):
        mesh = ax.pcolormesh(t, f, db, shading="auto", cmap="magma",
                             vmin=DB_FLOOR, vmax=db.max())
        ax.set_title(label)
        ax.set_xlabel("time (s)")
        if fmax is not None:
            ax.set_ylim(0, fmax)
    axes[0].set_ylabel("frequency (Hz)")
    fig.colorbar(mesh, ax=axes, label="dB")
    if similarity is not None:
        fig.suptitle(f"log-spectrogram cosine similarity {similarity:.3f}")
    _save(fig, path)


def fig_spectrogram(path, spec, title: str = "", fmax: float | None = None):
    f, t, db = spec
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(t, f, db, shading="auto", cmap="magma",
                         vmin=DB_FLOOR, vmax=db.max())
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    if fmax is not None:
        ax.set_ylim(0, fmax)
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="dB")
    _save(fig, path)


def fig_sweep(path, sweep: PositionSweep):
    """Gain / zero-radius / pole-radius curves along the sweep axis,
    with shape-boundary crossings marked."""
    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    series = (
        ("mean |g|", sweep.mean_abs_gain),
        ("mean zero radius", sweep.mean_zero_radius),
        ("mean pole radius", sweep.mean_pole_radius),
    )
    cross = sweep.positions[sweep.crossings()]
    for ax, (label, values) in zip(axes, series):
        ax.plot(sweep.positions, values, lw=1.2)
        for cx in cross:
            ax.axvline(cx, color="gray", ls=":", lw=0.8)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel(f"{sweep.axis} position")
    ratio = sweep.boundary_ratio()
    axes[0].set_title(f"max step / interior median step = {ratio:.2f}")
    _save(fig, path)
