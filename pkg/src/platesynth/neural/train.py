"""Training loop: Adam on the spectral loss, reproducible per seed.

Each step's batch is a pure function of (seed, step index), so a run
resumed from a checkpoint (with its optimizer moments) continues the
uninterrupted run exactly.  Extending a finished cosine-schedule run
re-shapes the schedule over the new, longer horizon.  The recorded loss
is the batch loss the step's gradient was computed from, so logging
adds no extra forward pass.

The spectral loss gives almost no pull on a pole that sits far from the
resonance it should model; left alone, the optimizer smears the bank
into a broadband blob and the pole frequencies never recover.
``freq_warmup_steps`` turns on direct placement supervision: for the
first steps the head is trained purely to put each branch's pole angle
on the body's response peaks and its pole radius on the decay the
damping law dictates there (a smooth regression with useful gradients
at any distance).  Afterwards the spectral loss drives the gain and
zero channels while the regression keeps holding the pole channels on
target; the two never disagree about a raw value because they own
disjoint slices of the coefficient tensor.  The radius stays
supervised because a pinned angle alone does not survive: the spectral
loss broadens every resonance to fill the valleys and the response
ends up with no local maxima at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from ..dataset import Dataset
from ..resonator import (R_MAX, batch_loss, batch_loss_and_raw_grad,
                         top_peak_frequencies)
from .model import (ModelHyper, ModelWeights, encode, encode_backward,
                    init_weights, predict, predict_backward)
from .normalize import normalize_material_array


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    steps: int = 2000
    seed: int = 0
    # cosine-decay floor; None keeps the rate constant
    final_learning_rate: float | None = None
    # steps spent purely on pole placement; > 0 also keeps the pole angle
    # and radius channels under placement supervision for the rest of the run
    freq_warmup_steps: int = 0

    def __post_init__(self):
        if self.learning_rate < 0 or self.batch_size < 1 or self.steps < 0:
            raise ValueError("learning_rate >= 0, batch_size >= 1, steps >= 0")
        if self.final_learning_rate is not None and not (
                0.0 <= self.final_learning_rate <= self.learning_rate):
            raise ValueError(
                "final_learning_rate must lie in [0, learning_rate]")
        if self.freq_warmup_steps < 0:
            raise ValueError("freq_warmup_steps must be >= 0")


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_weights(cls, weights: ModelWeights) -> "AdamState":
        return cls(m={k: np.zeros_like(w) for k, w in weights.tensors.items()},
                   v={k: np.zeros_like(w) for k, w in weights.tensors.items()})


_BETA1, _BETA2, _EPS = 0.9, 0.999, 1e-8

# The radius regression moves raw values of order one while the angle one
# makes log-ratio corrections of order a tenth; unscaled it crowds the
# angle signal out of the shared hidden layers, and its own convergence
# survives the down-weighting through its private head rows.
_RADIUS_WEIGHT = 1.0 / 16.0


def _adam_update(weights: ModelWeights, grads: dict, opt: AdamState, lr: float):
    opt.t += 1
    bc1 = 1.0 - _BETA1 ** opt.t
    bc2 = 1.0 - _BETA2 ** opt.t
    for k, w in weights.tensors.items():
        g = grads[k]
        opt.m[k] = _BETA1 * opt.m[k] + (1.0 - _BETA1) * g
        opt.v[k] = _BETA2 * opt.v[k] + (1.0 - _BETA2) * g * g
        w -= lr * (opt.m[k] / bc1) / (np.sqrt(opt.v[k] / bc2) + _EPS)


def batch_indices(seed: int, step: int, n: int, batch_size: int) -> np.ndarray:
    rng = np.random.default_rng([seed, step])
    return rng.integers(0, n, size=batch_size)


def _pole_targets(ds: Dataset, freqs: np.ndarray, branches: int):
    """Per-example (n, L) pole-angle targets and raw radius targets.

    Examples sharing a shape and material describe the same resonant
    body, so their response peaks are pooled and the targets are the
    same for the whole group; pooling recovers modes that any one
    excitation position misses (a peak vanishes when driven at its own
    node), and per-example variation is grid jitter that would only
    roughen the regression.  One mode straddles adjacent grid bins
    across the group, so runs of adjacent pooled bins form clusters; a
    cluster holding two peaks of one example holds two real modes and
    is split between them.  Each cluster is represented by the bin
    nearest the middle of its span (fewest bins to its farthest
    member), and branches are spread across the ascending cluster list
    in frequency order.

    The radius target applies the Rayleigh rule the modal solver uses,
    decay (alpha + beta * omega^2) / 2, at the anchored frequency, and
    is expressed in raw head units so its regression never saturates.
    """
    n = len(ds)
    theta_t = np.empty((n, branches))
    scale = 2.0 * np.pi / ds.sample_rate
    pick0 = np.arange(branches)
    groups: dict[bytes, list[int]] = {}
    for i in range(n):
        key = ds.grids[i].tobytes() + ds.materials[i].tobytes()
        groups.setdefault(key, []).append(i)
    for members in groups.values():
        counts: dict[int, int] = {}
        own: dict[int, np.ndarray] = {}
        for i in members:
            pk = top_peak_frequencies(freqs,
                                      ds.targets[i].astype(np.float64),
                                      branches)
            # peaks are grid values, so searchsorted recovers exact bins
            own[i] = np.sort(np.searchsorted(freqs, pk))
            for b in own[i]:
                counts[int(b)] = counts.get(int(b), 0) + 1
        if not counts:
            theta_t[members] = 440.0 * scale  # flat targets: park mid-band
            continue
        ordered = sorted(counts)
        clusters = [[ordered[0]]]
        for b in ordered[1:]:
            if b - clusters[-1][-1] <= 1:
                clusters[-1].append(b)
            else:
                clusters.append([b])

        def cut_between(cl: list[int], pair) -> list[list[int]]:
            # clusters are contiguous runs, so the midpoint bin is present
            k = cl.index((int(pair[0]) + int(pair[1])) // 2)
            return [cl[:k + 1], cl[k + 1:]]

        final: list[list[int]] = []
        while clusters:
            cl = clusters.pop(0)
            pair = next(((a, b) for i in members
                         for a, b in zip(own[i], own[i][1:])
                         if cl[0] <= a and b <= cl[-1]), None)
            if pair is None:
                final.append(cl)
            else:
                clusters = cut_between(cl, pair) + clusters
        reps = np.array([min(c, key=lambda b: (abs(2 * b - c[0] - c[-1]),
                                               -counts[b]))
                         for c in final])
        theta_t[members] = freqs[reps[pick0 * reps.size // branches]] * scale
    omega = theta_t * ds.sample_rate
    decay = 0.5 * (ds.materials[:, 3:4] + ds.materials[:, 4:5] * omega * omega)
    ratio = np.exp(-decay / ds.sample_rate) / R_MAX
    raw_r_t = logit(np.clip(ratio, expit(-8.0), expit(8.0)))
    return theta_t, raw_r_t


def _batch_arrays(ds: Dataset, idx: np.ndarray):
    return (ds.grids[idx].astype(np.float64), ds.positions[idx],
            normalize_material_array(ds.materials[idx]),
            ds.targets[idx].astype(np.float64))


def eval_batch_loss(weights: ModelWeights, ds: Dataset, idx: np.ndarray,
                    freqs: np.ndarray) -> float:
    grids, pos, phi, targets = _batch_arrays(ds, idx)
    latent = encode(weights, grids)
    raw = predict(weights, latent, pos, phi)
    return float(np.mean(batch_loss(raw, targets, freqs, ds.sample_rate)))


def train(ds: Dataset, config: TrainConfig,
          weights: ModelWeights | None = None,
          opt: AdamState | None = None,
          start_step: int = 0,
          hyper: ModelHyper | None = None):
    """-> (weights, loss_curve (steps,), opt).  Deterministic per seed."""
    if weights is None:
        if hyper is None:
            hyper = ModelHyper(sample_rate=ds.sample_rate)
        weights = init_weights(hyper, config.seed)
    if weights.hyper.sample_rate != ds.sample_rate:
        raise ValueError("model and dataset sample rates disagree")
    if opt is None:
        opt = AdamState.for_weights(weights)
    freqs = ds.freqs()
    n = len(ds)
    curve = np.empty(config.steps)
    # schedule runs over absolute step indices so resumed runs continue it
    total = start_step + config.steps
    log_theta_t = raw_r_t = None
    if config.freq_warmup_steps > 0:
        theta_t, raw_r_t = _pole_targets(ds, freqs, weights.hyper.branches)
        log_theta_t = np.log(theta_t)

    for i in range(config.steps):
        step = start_step + i
        if config.final_learning_rate is None:
            lr = config.learning_rate
        else:
            frac = step / max(total - 1, 1)
            lr = config.final_learning_rate + 0.5 * (
                config.learning_rate - config.final_learning_rate
            ) * (1.0 + np.cos(np.pi * frac))
        idx = batch_indices(config.seed, step, n, config.batch_size)
        grids, pos, phi, targets = _batch_arrays(ds, idx)

        latent, enc_cache = encode(weights, grids, want_cache=True)
        raw, head_cache = predict(weights, latent, pos, phi, want_cache=True)
        if log_theta_t is not None:
            # pole angle: squared log-ratio to the assigned peak; radius:
            # squared raw distance to the damping-rule value; the cascade
            # stages of a branch share that branch's targets
            s = expit(raw[:, 1])
            dlog = np.log(np.pi * s) - log_theta_t[idx][:, None, :]
            dr = raw[:, 0] - raw_r_t[idx][:, None, :]
            k = 2.0 / dlog[0].size
            dangle = k * dlog * (1.0 - s)
            dradius = k * _RADIUS_WEIGHT * dr
        if step < config.freq_warmup_steps:
            losses = np.mean(dlog * dlog + _RADIUS_WEIGHT * dr * dr,
                             axis=(1, 2))
            draw = np.zeros_like(raw)
            draw[:, 0] = dradius
            draw[:, 1] = dangle
        else:
            losses, draw = batch_loss_and_raw_grad(raw, targets, freqs,
                                                   ds.sample_rate)
            if log_theta_t is not None:
                draw[:, 0] = dradius
                draw[:, 1] = dangle
        if not np.all(np.isfinite(losses)):
            raise RuntimeError(
                f"non-finite loss at step {step}: batch losses {losses}")

        grads: dict[str, np.ndarray] = {}
        dlatent = predict_backward(weights, draw / len(idx), head_cache, grads)
        encode_backward(weights, dlatent, enc_cache, grads)
        _adam_update(weights, grads, opt, lr)

        curve[i] = float(np.mean(losses))
    return weights, curve, opt
