"""Plain numpy layers with explicit forward caches and backward passes."""

from __future__ import annotations

import numpy as np


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int = 2, pad: int = 1):
    """x (B,C,H,W), w (F,C,KH,KW), b (F,) -> out (B,F,Ho,Wo)."""
    bsz, c, h, wid = x.shape
    f, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wid + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    s = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp, (bsz, c, kh, kw, ho, wo),
        (s[0], s[1], s[2], s[3], s[2] * stride, s[3] * stride),
        writeable=False)
    cols = view.reshape(bsz, c * kh * kw, ho * wo)
    out = np.einsum("fk,bkp->bfp", w.reshape(f, -1), cols, optimize=True)
    out += b[None, :, None]
    cache = (x.shape, cols, w, stride, pad, (ho, wo))
    return out.reshape(bsz, f, ho, wo), cache


def conv2d_backward(dout: np.ndarray, cache):
    x_shape, cols, w, stride, pad, (ho, wo) = cache
    bsz, c, h, wid = x_shape
    f, _, kh, kw = w.shape
    d2 = dout.reshape(bsz, f, ho * wo)
    dw = np.einsum("bfp,bkp->fk", d2, cols, optimize=True).reshape(w.shape)
    db = d2.sum(axis=(0, 2))
    dcols = np.einsum("fk,bfp->bkp", w.reshape(f, -1), d2, optimize=True)
    dcols = dcols.reshape(bsz, c, kh, kw, ho, wo)
    dxp = np.zeros((bsz, c, h + 2 * pad, wid + 2 * pad))
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] \
                += dcols[:, :, i, j]
    dx = dxp[:, :, pad:pad + h, pad:pad + wid]
    return dx, dw, db


def affine_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    return x @ w + b, (x, w)


def affine_backward(dout: np.ndarray, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def relu_forward(x: np.ndarray):
    out = np.maximum(x, 0.0)
    return out, (x > 0)


def relu_backward(dout: np.ndarray, mask):
    return dout * mask


def tanh_forward(x: np.ndarray):
    out = np.tanh(x)
    return out, out


def tanh_backward(dout: np.ndarray, out):
    return dout * (1.0 - out * out)


def sigmoid_forward(x: np.ndarray):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out, out


def sigmoid_backward(dout: np.ndarray, out):
    return dout * out * (1.0 - out)


def gap_forward(x: np.ndarray):
    """Global average pool (B,C,H,W) -> (B,C)."""
    return x.mean(axis=(2, 3)), x.shape


def gap_backward(dout: np.ndarray, x_shape):
    bsz, c, h, w = x_shape
    return np.broadcast_to(dout[:, :, None, None] / (h * w),
                           x_shape).copy()
