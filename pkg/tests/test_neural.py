"""Network tests: forward shapes, backprop vs finite differences, training."""

import numpy as np
import pytest

from platesynth.dataset import Dataset
from platesynth.modal.fem import MaterialParams
from platesynth.neural.model import (ModelHyper, encode, encode_backward,
                                     init_weights, predict, predict_backward)
from platesynth.neural.normalize import (denormalize_material,
                                         normalize_material,
                                         normalize_material_array)
from platesynth.neural.train import (AdamState, TrainConfig, batch_indices,
                                     train)
from platesynth.resonator import batch_loss, batch_loss_and_raw_grad


def _jitter(weights, rng, scale=0.05):
    # nonzero biases and perturbed weights move activations off the exact
    # ReLU kinks that break finite differences
    for v in weights.tensors.values():
        v += rng.normal(0.0, scale, v.shape)
    return weights


def test_encode_predict_shapes_and_determinism(tiny_weights, blob_grid, rng):
    grids = np.stack([blob_grid.cells, blob_grid.cells])
    lat = encode(tiny_weights, grids)
    h = tiny_weights.hyper
    assert lat.shape == (2, h.d_lat)
    assert np.all((lat > 0) & (lat < 1))
    np.testing.assert_array_equal(lat, encode(tiny_weights, grids))
    np.testing.assert_array_equal(lat[:1], encode(tiny_weights, blob_grid.cells))

    pos = rng.uniform(0.2, 0.8, (2, 2))
    phi = rng.uniform(0.0, 1.0, (2, 5))
    raw = predict(tiny_weights, lat, pos, phi)
    assert raw.shape == (2, 5, h.cascade, h.branches)
    with pytest.raises(ValueError):
        predict(tiny_weights, lat, pos[:, :1], phi)
    with pytest.raises(ValueError):
        predict(tiny_weights, lat, pos, phi[:, :3])


def test_full_backprop_matches_finite_differences(tiny_weights, blob_grid, rng):
    weights = _jitter(tiny_weights.copy(), rng)
    grids = np.stack([blob_grid.cells] * 2).astype(np.float64)
    pos = rng.uniform(0.3, 0.7, (2, 2))
    phi = rng.uniform(0.1, 0.9, (2, 5))
    k = 64
    freqs = np.geomspace(40.0, 18000.0, k)
    target = rng.uniform(-60.0, 0.0, (2, k))

    def loss_of(w):
        raw = predict(w, encode(w, grids), pos, phi)
        return float(np.mean(batch_loss(raw, target, freqs, 44100.0)))

    latent, enc_cache = encode(weights, grids, want_cache=True)
    raw, head_cache = predict(weights, latent, pos, phi, want_cache=True)
    _, draw = batch_loss_and_raw_grad(raw, target, freqs, 44100.0)
    grads = {}
    dlatent = predict_backward(weights, draw / 2.0, head_cache, grads)
    encode_backward(weights, dlatent, enc_cache, grads)

    eps = 1e-5
    g = np.random.default_rng(7)
    worst = 0.0
    for name in ("enc.conv0.w", "enc.fc.w", "head.fc1.w", "head.out.w",
                 "head.out.b"):
        flat = weights.tensors[name].reshape(-1)
        gflat = grads[name].reshape(-1)
        for j in g.choice(flat.size, size=4, replace=False):
            keep = flat[j]
            flat[j] = keep + eps
            up = loss_of(weights)
            flat[j] = keep - eps
            dn = loss_of(weights)
            flat[j] = keep
            fd = (up - dn) / (2 * eps)
            denom = max(abs(fd), abs(gflat[j]), 1e-8)
            worst = max(worst, abs(fd - gflat[j]) / denom)
    assert worst < 1e-4


def _toy_dataset(rng, n=24, bins=96):
    grids = np.ones((n, 64, 64), dtype=bool)
    mats = np.tile([2000.0, 2e10, 0.3, 4.0, 1e-6], (n, 1))
    pos = rng.uniform(0.25, 0.75, (n, 2))
    freqs = np.geomspace(30.0, 16000.0, bins)
    targets = np.full((n, bins), -70.0)
    for i in range(n):
        for fc in (200.0 * (1 + i % 5), 3000.0):
            targets[i] += 45.0 * np.exp(-0.5 * ((np.log(freqs / fc)) / 0.1) ** 2)
    return Dataset(grids=grids, materials=mats, positions=pos,
                   targets=targets.astype(np.float32), sample_rate=44100.0,
                   fmin=30.0, fmax_ratio=16000.0 / 44100.0)


def test_short_training_reduces_loss(rng):
    ds = _toy_dataset(rng)
    hyper = ModelHyper(d_lat=16, branches=8, cascade=1, hidden=32,
                       channels=(4, 8), sample_rate=44100.0)
    tc = TrainConfig(learning_rate=2e-3, batch_size=8, steps=150, seed=1)
    _, curve, _ = train(ds, tc, hyper=hyper)
    assert len(curve) == 150
    assert np.mean(curve[-10:]) < 0.5 * np.mean(curve[:10])


def test_zero_learning_rate_leaves_weights_untouched(rng):
    ds = _toy_dataset(rng)
    hyper = ModelHyper(d_lat=16, branches=8, cascade=1, hidden=32,
                       channels=(4, 8), sample_rate=44100.0)
    before = init_weights(hyper, seed=3)
    frozen = {k: v.copy() for k, v in before.tensors.items()}
    tc = TrainConfig(learning_rate=0.0, batch_size=8, steps=5, seed=3)
    after, _, _ = train(ds, tc, weights=before)
    for k in frozen:
        np.testing.assert_array_equal(after.tensors[k], frozen[k])


def test_training_is_deterministic_and_resumable(rng):
    ds = _toy_dataset(rng)
    hyper = ModelHyper(d_lat=16, branches=8, cascade=1, hidden=32,
                       channels=(4, 8), sample_rate=44100.0)
    tc = TrainConfig(learning_rate=1e-3, batch_size=8, steps=30, seed=2)
    w1, c1, _ = train(ds, tc, hyper=hyper)
    w2, c2, _ = train(ds, tc, hyper=hyper)
    np.testing.assert_array_equal(c1, c2)
    for k in w1.tensors:
        np.testing.assert_array_equal(w1.tensors[k], w2.tensors[k])

    # a run split at step 18 continues the uninterrupted one exactly
    first = TrainConfig(learning_rate=1e-3, batch_size=8, steps=18, seed=2)
    rest = TrainConfig(learning_rate=1e-3, batch_size=8, steps=12, seed=2)
    wa, ca, opt = train(ds, first, hyper=hyper)
    wb, cb, _ = train(ds, rest, weights=wa, opt=opt, start_step=18)
    np.testing.assert_array_equal(np.concatenate([ca, cb]), c1)
    for k in w1.tensors:
        np.testing.assert_array_equal(wb.tensors[k], w1.tensors[k])


def test_cosine_schedule_behavior(rng):
    ds = _toy_dataset(rng)
    hyper = ModelHyper(d_lat=16, branches=8, cascade=1, hidden=32,
                       channels=(4, 8), sample_rate=44100.0)
    base = dict(learning_rate=2e-3, batch_size=8, steps=24, seed=5)
    w_const, c_const, _ = train(ds, TrainConfig(**base), hyper=hyper)

    # a floor equal to the base rate degenerates to the constant schedule
    w_flat, c_flat, _ = train(
        ds, TrainConfig(**base, final_learning_rate=2e-3), hyper=hyper)
    np.testing.assert_array_equal(c_flat, c_const)
    for k in w_const.tensors:
        np.testing.assert_array_equal(w_flat.tensors[k], w_const.tensors[k])

    # a real decay changes the trajectory but stays deterministic
    cos_cfg = TrainConfig(**base, final_learning_rate=1e-5)
    w_a, c_a, _ = train(ds, cos_cfg, hyper=hyper)
    w_b, c_b, _ = train(ds, cos_cfg, hyper=hyper)
    np.testing.assert_array_equal(c_a, c_b)
    for k in w_a.tensors:
        np.testing.assert_array_equal(w_a.tensors[k], w_b.tensors[k])
    assert not np.array_equal(c_a, c_const)


def test_batch_indices_reproducible():
    a = batch_indices(0, 17, 100, 32)
    b = batch_indices(0, 17, 100, 32)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (32,)
    assert not np.array_equal(a, batch_indices(0, 18, 100, 32))
    assert not np.array_equal(a, batch_indices(1, 17, 100, 32))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(final_learning_rate=2e-3)  # above the base rate


def test_material_normalization_round_trip():
    mat = MaterialParams(rho=1234.0, E=3.3e10, nu=0.22, alpha_R=2.5,
                         beta_R=8e-7)
    vec = normalize_material(mat)
    assert vec.shape == (5,)
    assert np.all((vec >= 0) & (vec <= 1))
    back = denormalize_material(vec)
    for name in ("rho", "E", "nu", "alpha_R", "beta_R"):
        assert getattr(back, name) == pytest.approx(getattr(mat, name),
                                                    rel=1e-12)


def test_material_normalization_array_matches_scalar():
    mats = np.array([[700.0, 1e10, 0.3, 5.0, 1e-6],
                     [9000.0, 4e10, 0.15, 2.0, 3e-7]])
    arr = normalize_material_array(mats)
    for i in range(2):
        one = normalize_material(MaterialParams(*mats[i]))
        np.testing.assert_allclose(arr[i], one, rtol=1e-15)
    with pytest.raises(ValueError):
        normalize_material_array(np.zeros((2, 4)))
