"""Second-order resonator bank: L parallel branches of M cascaded biquads.

The bank is driven by a raw, unconstrained (5, M, L) coefficient tensor
(the output of the prediction head).  ``map_raw_to_bank`` squashes the
raw values into a stable region of coefficient space, so any finite
input yields poles strictly inside the unit circle.  ``loss_gradient``
carries the analytic chain rule of the spectral loss back to the raw
tensor, which is what makes the bank trainable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .kernels import biquad_cascade_block

# Magnitude floor applied before any loss, in dB.  Keeps gradients
# bounded at spectral nulls.
DB_FLOOR = -100.0

# Upper bound on pole radius produced by the stable mapping.
R_MAX = 0.9999

_LN10 = float(np.log(10.0))


@dataclass(frozen=True)
class BiquadSection:
    """One second-order section g*(1 + b1 z^-1 + b2 z^-2)/(1 + a1 z^-1 + a2 z^-2)."""

    g: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self):
        vals = (self.g, self.b1, self.b2, self.a1, self.a2)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("biquad coefficients must be finite")
        if not (abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2):
            raise ValueError(
                f"unstable denominator: a1={self.a1}, a2={self.a2} "
                "outside the stability triangle"
            )

    @property
    def pole_radius(self) -> float:
        return float(np.sqrt(max(self.a2, 0.0))) if self.a2 >= 0 else self._root_radius()

    def _root_radius(self) -> float:
        return float(np.max(np.abs(np.roots([1.0, self.a1, self.a2]))))


class FilterBank:
    """Immutable coefficient set for L parallel cascades of M sections.

    coeffs has shape (L, M, 5), ordered [g, b1, b2, a1, a2] per section.
    """

    __slots__ = ("coeffs", "sample_rate")

    def __init__(self, coeffs: np.ndarray, sample_rate: float):
        coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
        if coeffs.ndim != 3 or coeffs.shape[2] != 5:
            raise ValueError(f"coeffs must have shape (L, M, 5), got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("filter bank coefficients must be finite")
        a1 = coeffs[:, :, 3]
        a2 = coeffs[:, :, 4]
        if not (np.all(np.abs(a2) < 1.0) and np.all(np.abs(a1) < 1.0 + a2)):
            raise ValueError("some sections violate the stability triangle")
        if sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "sample_rate", float(sample_rate))

    def __setattr__(self, name, value):
        raise AttributeError("FilterBank is immutable")

    @property
    def branches(self) -> int:
        return self.coeffs.shape[0]

    @property
    def cascade_depth(self) -> int:
        return self.coeffs.shape[1]

    def section(self, l: int, m: int) -> BiquadSection:
        g, b1, b2, a1, a2 = (float(v) for v in self.coeffs[l, m])
        return BiquadSection(g, b1, b2, a1, a2)


class FilterState:
    """Direct-Form-II delay-line state, two values per section."""

    __slots__ = ("z",)

    def __init__(self, branches: int, cascade_depth: int):
        self.z = np.zeros((branches, cascade_depth, 2), dtype=np.float64)

    @classmethod
    def for_bank(cls, bank: FilterBank) -> "FilterState":
        return cls(bank.branches, bank.cascade_depth)

    def matches(self, bank: FilterBank) -> bool:
        return self.z.shape[:2] == (bank.branches, bank.cascade_depth)

    def reset(self):
        self.z[:] = 0.0

    def copy(self) -> "FilterState":
        other = FilterState(self.z.shape[0], self.z.shape[1])
        other.z[:] = self.z
        return other


@dataclass(frozen=True)
class MagnitudeResponse:
    """Log-magnitude response in dB on a fixed frequency grid."""

    freqs: np.ndarray
    db: np.ndarray

    def __post_init__(self):
        if self.freqs.shape != self.db.shape or self.freqs.ndim != 1:
            raise ValueError("freqs and db must be equal-length 1-D arrays")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("frequency grid must be strictly increasing")


def log_freq_grid(n_bins: int = 1024, fmin: float = 20.0,
                  sample_rate: float = 44100.0, fmax_ratio: float = 0.45) -> np.ndarray:
    """Logarithmically spaced analysis frequencies in [fmin, fmax_ratio*sr]."""
    if n_bins < 2 or fmin <= 0:
        raise ValueError("need n_bins >= 2 and fmin > 0")
    fmax = fmax_ratio * sample_rate
    if fmax >= sample_rate / 2:
        raise ValueError("fmax_ratio puts the grid at or above Nyquist")
    return np.geomspace(fmin, fmax, n_bins)


# ---------------------------------------------------------------------------
# Stable mapping from raw network outputs to section coefficients
# ---------------------------------------------------------------------------

def _sigmoid(x):
    # stable two-sided evaluation
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def map_raw_to_coeffs(raw: np.ndarray) -> np.ndarray:
    """Map raw (..., 5, M, L) values onto stable section coefficients (..., L, M, 5).

    Per section: pole radius r = R_MAX*sigmoid(raw0), pole angle
    theta = pi*sigmoid(raw1), so a1 = -2 r cos(theta), a2 = r^2 always
    lands inside the stability triangle.  Zeros are bounded via
    b1 = 2 tanh(raw2), b2 = tanh(raw3); gain g = raw4/(M*L) keeps the
    parallel sum O(1) for unit-scale raw values.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim < 3 or raw.shape[-3] != 5:
        raise ValueError(f"raw must have shape (..., 5, M, L), got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw coefficients contain non-finite values")
    M, L = raw.shape[-2], raw.shape[-1]
    r = R_MAX * _sigmoid(raw[..., 0, :, :])
    theta = np.pi * _sigmoid(raw[..., 1, :, :])
    coeffs = np.empty(raw.shape[:-3] + (L, M, 5), dtype=np.float64)
    gml = np.swapaxes(raw[..., 4, :, :], -1, -2)
    coeffs[..., 0] = gml / (M * L)
    coeffs[..., 1] = np.swapaxes(2.0 * np.tanh(raw[..., 2, :, :]), -1, -2)
    coeffs[..., 2] = np.swapaxes(np.tanh(raw[..., 3, :, :]), -1, -2)
    coeffs[..., 3] = np.swapaxes(-2.0 * r * np.cos(theta), -1, -2)
    coeffs[..., 4] = np.swapaxes(r * r, -1, -2)
    return coeffs


def map_raw_to_bank(raw: np.ndarray, sample_rate: float) -> FilterBank:
    """Build a guaranteed-stable FilterBank from a raw (5, M, L) tensor."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3:
        raise ValueError(f"raw must have shape (5, M, L), got {raw.shape}")
    return FilterBank(map_raw_to_coeffs(raw), sample_rate)


# ---------------------------------------------------------------------------
# Block processing
# ---------------------------------------------------------------------------

def process_block(bank: FilterBank, state: FilterState, x: np.ndarray,
                  out: np.ndarray | None = None,
                  scratch: np.ndarray | None = None) -> np.ndarray:
    """Filter one block through the bank, updating state in place.

    Pass preallocated ``out`` and ``scratch`` buffers to keep the call
    allocation-free (the real-time engine does).
    """
    if not state.matches(bank):
        raise ValueError(
            f"state shape {state.z.shape[:2]} does not match bank "
            f"({bank.branches}, {bank.cascade_depth})"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValueError("input block must be a non-empty 1-D array")
    if out is None:
        out = np.empty_like(x)
    if scratch is None:
        scratch = np.empty_like(x)
    biquad_cascade_block(bank.coeffs, state.z, x, out, scratch)
    return out


# ---------------------------------------------------------------------------
# Frequency response and spectral loss
# ---------------------------------------------------------------------------

def _complex_response(coeffs: np.ndarray, freqs: np.ndarray,
                      sample_rate: float) -> np.ndarray:
    """H(e^{j w}) = sum_l prod_m H_{l,m} for coeffs (..., L, M, 5). Returns (..., K)."""
    w = 2.0 * np.pi * freqs / sample_rate
    e1 = np.exp(-1j * w)
    e2 = e1 * e1
    g = coeffs[..., 0:1]
    num = 1.0 + coeffs[..., 1:2] * e1 + coeffs[..., 2:3] * e2
    den = 1.0 + coeffs[..., 3:4] * e1 + coeffs[..., 4:5] * e2
    # (..., L, M, K) sections; product over cascade, sum over branches
    hs = g * num / den
    return hs.prod(axis=-2).sum(axis=-2)


def _check_freqs(freqs: np.ndarray, sample_rate: float):
    if np.any(freqs <= 0) or np.any(freqs >= sample_rate / 2):
        raise ValueError("frequencies must lie strictly inside (0, sample_rate/2)")


def frequency_response(bank: FilterBank, freqs: np.ndarray) -> MagnitudeResponse:
    """Evaluate the bank's magnitude response in dB, clamped at DB_FLOOR."""
    freqs = np.asarray(freqs, dtype=np.float64)
    _check_freqs(freqs, bank.sample_rate)
    h = _complex_response(bank.coeffs, freqs, bank.sample_rate)
    mag = np.abs(h)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    return MagnitudeResponse(freqs, np.maximum(db, DB_FLOOR))


def spectral_loss(pred: MagnitudeResponse, target: MagnitudeResponse) -> float:
    """Mean squared error between two dB responses on the same grid."""
    if not np.array_equal(pred.freqs, target.freqs):
        raise ValueError("responses are on different frequency grids")
    diff = pred.db - target.db
    return float(np.mean(diff * diff))


def top_peak_frequencies(freqs: np.ndarray, db: np.ndarray, n: int = 5,
                         floor_db: float = 60.0) -> np.ndarray:
    """Frequencies of the n strongest local maxima of a response curve.

    Peaks more than floor_db below the global maximum are ignored.
    Returned in descending height order; may be shorter than n.
    """
    idx, props = find_peaks(db, height=float(db.max()) - floor_db, distance=4)
    if idx.size == 0:
        return np.empty(0)
    order = np.argsort(props["peak_heights"])[::-1][:n]
    return freqs[idx[order]]


def peak_match_errors(freqs: np.ndarray, target_db: np.ndarray,
                      pred_db: np.ndarray, n: int = 5) -> np.ndarray:
    """Relative frequency error of each strong target peak's nearest
    predicted peak; shape (n_matched,)."""
    t_peaks = top_peak_frequencies(freqs, target_db, n)
    p_peaks = top_peak_frequencies(freqs, pred_db, max(n * 4, 20))
    if t_peaks.size == 0:
        return np.empty(0)
    if p_peaks.size == 0:
        return np.full(t_peaks.size, np.inf)
    return np.array([np.min(np.abs(p_peaks - f)) / f for f in t_peaks])


def batch_loss(raw: np.ndarray, target_db: np.ndarray, freqs: np.ndarray,
               sample_rate: float) -> np.ndarray:
    """Per-example spectral loss for raw (B, 5, M, L); no gradients."""
    raw = np.asarray(raw, dtype=np.float64)
    target_db = np.asarray(target_db, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    _check_freqs(freqs, sample_rate)
    h = _complex_response(map_raw_to_coeffs(raw), freqs, sample_rate)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(h))
    diff = np.maximum(db, DB_FLOOR) - target_db
    return np.mean(diff * diff, axis=1)


def batch_loss_and_raw_grad(raw: np.ndarray, target_db: np.ndarray,
                            freqs: np.ndarray, sample_rate: float):
    """Spectral loss and its analytic gradient w.r.t. raw, batched.

    raw (B, 5, M, L), target_db (B, K)  ->  losses (B,), grads (B, 5, M, L)

    The chain rule runs through the stable mapping, the complex section
    responses, the branch product / parallel sum, and the clamped dB
    magnitude.  Bins sitting at the dB floor contribute zero gradient.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 4 or raw.shape[1] != 5:
        raise ValueError(f"raw must have shape (B, 5, M, L), got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw coefficients contain non-finite values")
    target_db = np.asarray(target_db, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    _check_freqs(freqs, sample_rate)
    B, _, M, L = raw.shape
    K = freqs.shape[0]
    if target_db.shape != (B, K):
        raise ValueError("target_db shape does not match batch/grid")

    # mapped quantities, kept in (B, M, L) layout
    sig0 = _sigmoid(raw[:, 0])
    sig1 = _sigmoid(raw[:, 1])
    r = R_MAX * sig0
    theta = np.pi * sig1
    t2 = np.tanh(raw[:, 2])
    t3 = np.tanh(raw[:, 3])
    b1 = 2.0 * t2
    b2 = t3
    a1 = -2.0 * r * np.cos(theta)
    a2 = r * r
    g = raw[:, 4] / (M * L)

    w = 2.0 * np.pi * freqs / sample_rate
    e1 = np.exp(-1j * w)            # (K,)
    e2 = e1 * e1

    def bk(x):  # (B, M, L) -> (B, M, L, 1) for broadcasting against (K,)
        return x[..., None]

    # large (B, M, L, K) temporaries dominate the cost of this function,
    # so they are built in place and reused once dead
    num = bk(b1) * e1
    num += bk(b2) * e2
    num += 1.0
    den = bk(a1) * e1
    den += bk(a2) * e2
    den += 1.0
    np.divide(1.0, den, out=den)
    inv_den = den                                # den is dead past here
    hs = num * inv_den
    hs *= bk(g)

    if M > 1:
        # branch products with per-section exclusion (prefix * suffix)
        p_excl = np.ones_like(hs)
        suf = np.ones_like(hs)
        np.cumprod(hs[:, :-1], axis=1, out=p_excl[:, 1:])
        np.cumprod(hs[:, :0:-1], axis=1, out=suf[:, -2::-1])
        p_excl *= suf                            # prod over m' != m
        h = (p_excl[:, 0] * hs[:, 0]).sum(axis=1)   # (B, K)
    else:
        p_excl = None
        h = hs.sum(axis=(1, 2))

    mag2 = (h * h.conj()).real
    mag = np.sqrt(mag2)
    with np.errstate(divide="ignore"):
        db = 20.0 / _LN10 * np.log(mag)
    clamped = db <= DB_FLOOR
    db_c = np.where(clamped, DB_FLOOR, db)
    diff = db_c - target_db
    losses = np.mean(diff * diff, axis=1)

    # complex loss weight: dL = sum_k Re(W_k * dH_k)
    dl_ddb = 2.0 * diff / K
    safe_mag2 = np.where(clamped, 1.0, mag2)
    wgt = np.where(clamped, 0.0, dl_ddb * (20.0 / _LN10) / safe_mag2) * h.conj()

    # gradients w.r.t. mapped coefficients; every reduction over bins is
    # a complex matvec against e1/e2 or an elementwise dot
    inv_den *= wgt[:, None, None, :]
    t_ = inv_den                                 # wgt / den
    if M > 1:
        tp = t_ * p_excl
        bl = p_excl
        bl *= hs                                 # p_excl dead past here
    else:
        tp = t_
        bl = hs
    flat = (B * M * L, K)
    gb1 = g * (tp.reshape(flat) @ e1).real.reshape(B, M, L)
    gb2 = g * (tp.reshape(flat) @ e2).real.reshape(B, M, L)
    gg = np.einsum("bmlk,bmlk->bml", tp, num).real
    v = t_ * bl
    ga1 = -(v.reshape(flat) @ e1).real.reshape(B, M, L)
    ga2 = -(v.reshape(flat) @ e2).real.reshape(B, M, L)

    # chain to raw
    grads = np.empty_like(raw)
    dsig0 = sig0 * (1.0 - sig0)
    dsig1 = sig1 * (1.0 - sig1)
    grads[:, 0] = (ga1 * (-2.0 * np.cos(theta)) + ga2 * (2.0 * r)) * (R_MAX * dsig0)
    grads[:, 1] = ga1 * (2.0 * r * np.sin(theta)) * (np.pi * dsig1)
    grads[:, 2] = gb1 * 2.0 * (1.0 - t2 * t2)
    grads[:, 3] = gb2 * (1.0 - t3 * t3)
    grads[:, 4] = gg / (M * L)
    return losses, grads


def loss_gradient(raw: np.ndarray, target: MagnitudeResponse,
                  sample_rate: float) -> np.ndarray:
    """Analytic d(spectral_loss)/d(raw) for a single (5, M, L) raw tensor."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3:
        raise ValueError(f"raw must have shape (5, M, L), got {raw.shape}")
    _, grads = batch_loss_and_raw_grad(
        raw[None], target.db[None], target.freqs, sample_rate
    )
    return grads[0]
