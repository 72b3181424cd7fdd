"""Compiled inner loops for the audio render path.

Everything here is numba-jitted and operates on caller-owned buffers:
no array is allocated inside a kernel, so the audio thread can call
them at block rate without touching the Python heap for sample data.
"""

import numba as nb


@nb.njit(cache=True)
def biquad_cascade_block(coeffs, state, x, y, scratch):
    """Run a parallel bank of biquad cascades over one block.

    coeffs  (L, M, 5) float64, per section [g, b1, b2, a1, a2]
    state   (L, M, 2) float64, Direct-Form-II delay line [w1, w2]
    x, y    (n,) float64 input / output (y is overwritten)
    scratch (n,) float64 per-branch work buffer

    Section difference equations (Direct-Form-II):
        w[i] = in[i] - a1*w1 - a2*w2
        out[i] = g * (w[i] + b1*w1 + b2*w2)
    Branch outputs (cascade of M sections) are summed into y.
    """
    L = coeffs.shape[0]
    M = coeffs.shape[1]
    n = x.shape[0]
    for i in range(n):
        y[i] = 0.0
    for l in range(L):
        for i in range(n):
            scratch[i] = x[i]
        for m in range(M):
            g = coeffs[l, m, 0]
            b1 = coeffs[l, m, 1]
            b2 = coeffs[l, m, 2]
            a1 = coeffs[l, m, 3]
            a2 = coeffs[l, m, 4]
            w1 = state[l, m, 0]
            w2 = state[l, m, 1]
            for i in range(n):
                w = scratch[i] - a1 * w1 - a2 * w2
                scratch[i] = g * (w + b1 * w1 + b2 * w2)
                w2 = w1
                w1 = w
            state[l, m, 0] = w1
            state[l, m, 1] = w2
        for i in range(n):
            y[i] += scratch[i]


@nb.njit(cache=True)
def linear_crossfade(y_old, y_new, out, t0, t1):
    """out[i] = (1-t)*y_old[i] + t*y_new[i], t ramping t0..t1 over the block.

    A fade spanning k blocks passes (j/k, (j+1)/k) for block j, so the
    ramp ends exactly at 1 on the last block.
    """
    n = out.shape[0]
    if n == 1:
        out[0] = (1.0 - t1) * y_old[0] + t1 * y_new[0]
        return
    step = (t1 - t0) / (n - 1)
    for i in range(n):
        t = t0 + i * step
        out[i] = (1.0 - t) * y_old[i] + t * y_new[i]


@nb.njit(cache=True)
def ring_consume(ring, pos, out):
    """Copy n samples from the ring into out, zeroing them behind the read.

    Returns the advanced read position.  Ring capacity must be a power
    of two (masked indexing).
    """
    n = out.shape[0]
    mask = ring.shape[0] - 1
    for i in range(n):
        j = (pos + i) & mask
        out[i] = ring[j]
        ring[j] = 0.0
    return (pos + n) & mask


@nb.njit(cache=True)
def ring_mix(ring, start, data):
    """Add data into the ring starting at absolute position start."""
    n = data.shape[0]
    mask = ring.shape[0] - 1
    for i in range(n):
        ring[(start + i) & mask] += data[i]
