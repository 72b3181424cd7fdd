"""Coefficient predictor: conv shape encoder + fully-connected head.

encode() runs the convolutional stack once per shape; predict() runs the
cheap head on [latent, position, normalized material].  Keeping the two
entry points separate is what makes position/material updates affordable
at control rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..modal.shape import GRID_SIZE
from . import layers as ly

MODEL_VERSION = 1


@dataclass(frozen=True)
class ModelHyper:
    d_lat: int = 64
    branches: int = 32       # L
    cascade: int = 1         # M
    hidden: int = 256
    channels: tuple = (8, 16, 32, 64)
    sample_rate: float = 44100.0

    def as_dict(self) -> dict:
        return {"d_lat": self.d_lat, "branches": self.branches,
                "cascade": self.cascade, "hidden": self.hidden,
                "channels": list(self.channels),
                "sample_rate": self.sample_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelHyper":
        return cls(d_lat=int(d["d_lat"]), branches=int(d["branches"]),
                   cascade=int(d["cascade"]), hidden=int(d["hidden"]),
                   channels=tuple(int(c) for c in d["channels"]),
                   sample_rate=float(d["sample_rate"]))


@dataclass
class ModelWeights:
    tensors: dict[str, np.ndarray]
    hyper: ModelHyper
    version: int = MODEL_VERSION
    meta: dict = field(default_factory=dict)

    def copy(self) -> "ModelWeights":
        return ModelWeights({k: v.copy() for k, v in self.tensors.items()},
                            self.hyper, self.version, dict(self.meta))


def _head_bias_init(hyper: ModelHyper, rng: np.random.Generator) -> np.ndarray:
    """Spread initial pole angles log-uniformly across the audible band.

    raw layout per section is (r_raw, theta_raw, b1_raw, b2_raw, g_raw);
    theta = pi*sigmoid(theta_raw), so theta_raw = logit(theta/pi).
    r_raw ~ 7 starts poles near (but safely inside) the unit circle.
    """
    m, lb = hyper.cascade, hyper.branches
    bias = np.zeros((5, m, lb))
    sr = hyper.sample_rate
    lo, hi = 2 * np.pi * 80.0 / sr, 2 * np.pi * 8000.0 / sr
    thetas = np.exp(rng.uniform(np.log(lo), np.log(hi), size=(m, lb)))
    u = thetas / np.pi
    bias[1] = np.log(u / (1.0 - u))
    bias[0] = 7.0
    return bias.reshape(-1)


def init_weights(hyper: ModelHyper, seed: int = 0) -> ModelWeights:
    rng = np.random.default_rng(seed)
    t: dict[str, np.ndarray] = {}
    c_in = 1
    for i, c_out in enumerate(hyper.channels):
        fan_in = c_in * 9
        t[f"enc.conv{i}.w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in),
                                         (c_out, c_in, 3, 3))
        t[f"enc.conv{i}.b"] = np.zeros(c_out)
        c_in = c_out
    t["enc.fc.w"] = rng.normal(0.0, np.sqrt(1.0 / c_in), (c_in, hyper.d_lat))
    t["enc.fc.b"] = np.zeros(hyper.d_lat)

    dims = [hyper.d_lat + 7, hyper.hidden, hyper.hidden, hyper.hidden]
    for i in range(3):
        t[f"head.fc{i}.w"] = rng.normal(0.0, np.sqrt(1.0 / dims[i]),
                                        (dims[i], dims[i + 1]))
        t[f"head.fc{i}.b"] = np.zeros(dims[i + 1])
    n_out = 5 * hyper.cascade * hyper.branches
    t["head.out.w"] = rng.normal(0.0, 1e-3, (hyper.hidden, n_out))
    t["head.out.b"] = _head_bias_init(hyper, rng)
    return ModelWeights(t, hyper)


def _grid_batch(grids) -> np.ndarray:
    g = np.asarray(grids, dtype=np.float64)
    if g.ndim == 2:
        g = g[None]
    if g.shape[-2:] != (GRID_SIZE, GRID_SIZE):
        raise ValueError(f"grids must be {GRID_SIZE}x{GRID_SIZE}")
    return g[:, None]  # (B,1,H,W)


def encode(weights: ModelWeights, grids, want_cache: bool = False):
    """grids (B,64,64) or (64,64) bool/float -> latent (B,d_lat) in (0,1)."""
    t = weights.tensors
    x = _grid_batch(grids)
    caches = []
    for i in range(len(weights.hyper.channels)):
        x, c_conv = ly.conv2d_forward(x, t[f"enc.conv{i}.w"], t[f"enc.conv{i}.b"])
        x, c_relu = ly.relu_forward(x)
        caches.append((c_conv, c_relu))
    pooled, c_gap = ly.gap_forward(x)
    z, c_fc = ly.affine_forward(pooled, t["enc.fc.w"], t["enc.fc.b"])
    latent, c_sig = ly.sigmoid_forward(z)
    if want_cache:
        return latent, (caches, c_gap, c_fc, c_sig)
    return latent


def encode_backward(weights: ModelWeights, dlatent: np.ndarray, cache,
                    grads: dict):
    caches, c_gap, c_fc, c_sig = cache
    d = ly.sigmoid_backward(dlatent, c_sig)
    d, dw, db = ly.affine_backward(d, c_fc)
    grads["enc.fc.w"] = dw
    grads["enc.fc.b"] = db
    d = ly.gap_backward(d, c_gap)
    for i in reversed(range(len(weights.hyper.channels))):
        c_conv, c_relu = caches[i]
        d = ly.relu_backward(d, c_relu)
        d, dw, db = ly.conv2d_backward(d, c_conv)
        grads[f"enc.conv{i}.w"] = dw
        grads[f"enc.conv{i}.b"] = db


def predict(weights: ModelWeights, latent: np.ndarray, pos, phi_norm,
            want_cache: bool = False):
    """-> raw coefficients (B,5,M,L)."""
    t = weights.tensors
    hyper = weights.hyper
    latent = np.atleast_2d(np.asarray(latent, dtype=np.float64))
    pos = np.atleast_2d(np.asarray(pos, dtype=np.float64))
    phi = np.atleast_2d(np.asarray(phi_norm, dtype=np.float64))
    if pos.shape[1] != 2 or phi.shape[1] != 5:
        raise ValueError("pos must be (B,2) and phi_norm (B,5)")
    x = np.concatenate([latent, pos, phi], axis=1)
    if x.shape[1] != hyper.d_lat + 7:
        raise ValueError(f"conditioning width {x.shape[1]} != {hyper.d_lat + 7}")
    caches = []
    for i in range(3):
        x, c_aff = ly.affine_forward(x, t[f"head.fc{i}.w"], t[f"head.fc{i}.b"])
        x, c_tanh = ly.tanh_forward(x)
        caches.append((c_aff, c_tanh))
    out, c_out = ly.affine_forward(x, t["head.out.w"], t["head.out.b"])
    raw = out.reshape(-1, 5, hyper.cascade, hyper.branches)
    if want_cache:
        return raw, (caches, c_out, latent.shape[1])
    return raw


def predict_backward(weights: ModelWeights, draw: np.ndarray, cache,
                     grads: dict) -> np.ndarray:
    """Backprop through the head; returns dlatent (B,d_lat)."""
    caches, c_out, d_lat = cache
    d = draw.reshape(draw.shape[0], -1)
    d, dw, db = ly.affine_backward(d, c_out)
    grads["head.out.w"] = dw
    grads["head.out.b"] = db
    for i in reversed(range(3)):
        c_aff, c_tanh = caches[i]
        d = ly.tanh_backward(d, c_tanh)
        d, dw, db = ly.affine_backward(d, c_aff)
        grads[f"head.fc{i}.w"] = dw
        grads[f"head.fc{i}.b"] = db
    return d[:, :d_lat]
