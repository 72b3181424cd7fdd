"""End-to-end acceptance checks, one test per guarantee.

Every tolerance and time budget is pinned as a module constant.  The
three trained-model checks (training convergence, modulated render
against the physical reference, position-sweep smoothness) share one
session-scoped training run so the expensive part happens exactly once.
Everything here is headless library use.
"""

import dataclasses
import time
import tracemalloc
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.signal import hilbert

from platesynth import cli, reports
from platesynth.audiofile import read_wav, write_wav
from platesynth.dataset import Dataset, read_dataset, write_dataset
from platesynth.engine import (
    EngineConfig, Hit, RealtimeEngine, SetMaterial, SetShape,
)
from platesynth.excitation import kaiser_impulse
from platesynth.modal import (
    MaterialParams, ModalData, ShapeGrid, TRAINING_RANGES,
    plate_analytic_omegas, random_shape, render_modulated_reference,
    render_reference, solve_modes,
)
from platesynth.neural.checkpoint import load_checkpoint, save_checkpoint
from platesynth.neural.model import ModelHyper, encode, init_weights, predict
from platesynth.neural.normalize import normalize_material_array
from platesynth.neural.train import AdamState, TrainConfig, train
from platesynth.resonator import (
    DB_FLOOR, FilterState, MagnitudeResponse, batch_loss, frequency_response,
    log_freq_grid, loss_gradient, map_raw_to_bank, map_raw_to_coeffs,
    process_block, spectral_loss,
)
from platesynth.runconfig import default_config, parse_config
from platesynth.schedule import ModulationSchedule

SR = 44100.0

RESPONSE_BANKS = 100
RESPONSE_FFT = 16384
RESPONSE_REL_TOL = 1e-6
RESPONSE_BUDGET_S = 10.0

GRAD_CONFIGS = 50
GRAD_EPS = 1e-4
GRAD_REL_TOL = 1e-3
GRAD_BUDGET_S = 60.0

EIGEN_GRID = 64
EIGEN_MODES = 10
EIGEN_REL_TOL = 0.03
SCALING_REL_TOL = 1e-6
EIGEN_BUDGET_S = 120.0

T60_DRAWS = 10
T60_REL_TOL = 0.05

FUZZ_SECTIONS = 100_000
SWAP_BLOCKS = 10_000

TRAIN_MAX_STEPS = 10_000
TRAIN_BUDGET_S = 1800.0
TRAIN_LOSS_RATIO = 0.05
TRAIN_PEAK_TOL = 0.02
ACCEPT_TRAIN = dict(learning_rate=2e-3, final_learning_rate=1e-4,
                    batch_size=32, steps=10_000, seed=0)

MOD_DURATION_S = 4.0
MOD_MIN_COSINE = 0.80

SWEEP_STEPS = 257
SWEEP_MAX_RATIO = 10.0

RT_RENDER_S = 10.0
RT_BUDGET_S = 10.0
RT_CONTROL_HZ = 1000.0
ALLOC_BLOCKS = 1000
ALLOC_NET_B = 4096
ALLOC_PEAK_B = 2048


# ---------------------------------------------------------------------------
# Resonator bank
# ---------------------------------------------------------------------------

def test_frequency_response_matches_fft_oracle():
    rng = np.random.default_rng(101)
    impulse = np.zeros(RESPONSE_FFT)
    impulse[0] = 1.0
    bins = np.arange(1, RESPONSE_FFT // 2)
    freqs = bins * SR / RESPONSE_FFT
    start = time.perf_counter()
    for _ in range(RESPONSE_BANKS):
        branches = int(rng.integers(1, 9))
        cascade = int(rng.integers(1, 4))
        raw = rng.normal(0.0, 2.0, size=(5, cascade, branches))
        # the oracle is exact only when the ringing dies inside the window
        raw[0] = np.minimum(raw[0], 5.0)
        bank = map_raw_to_bank(raw, SR)
        state = FilterState(branches, cascade)
        ir = process_block(bank, state, impulse)
        ref = np.abs(np.fft.rfft(ir))[bins]
        mag = 10.0 ** (frequency_response(bank, freqs).db / 20.0)
        keep = ref >= max(ref.max() * 1e-4, 2e-5)
        assert keep.any()
        rel = np.abs(mag[keep] - ref[keep]) / ref[keep]
        assert rel.max() < RESPONSE_REL_TOL
    assert time.perf_counter() - start < RESPONSE_BUDGET_S


def test_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    tested = attempts = 0
    while tested < GRAD_CONFIGS:
        attempts += 1
        assert attempts < 400
        branches = int(rng.integers(1, 5))
        cascade = int(rng.integers(1, 3))
        n_bins = int(rng.integers(24, 128))
        freqs = log_freq_grid(n_bins, 30.0, SR, 0.4)
        raw = rng.normal(0.0, 1.2, size=(5, cascade, branches))
        base = frequency_response(map_raw_to_bank(raw, SR), freqs)
        # central differences are meaningless astride the dB floor clamp
        if np.any(base.db < DB_FLOOR + 1.0):
            continue
        target = MagnitudeResponse(freqs, rng.uniform(-80.0, 0.0, size=n_bins))
        grad = loss_gradient(raw, target, SR)
        fd = np.zeros_like(grad)
        for ix in np.ndindex(raw.shape):
            up, dn = raw.copy(), raw.copy()
            up[ix] += GRAD_EPS
            dn[ix] -= GRAD_EPS
            fd[ix] = (
                spectral_loss(frequency_response(map_raw_to_bank(up, SR), freqs), target)
                - spectral_loss(frequency_response(map_raw_to_bank(dn, SR), freqs), target)
            ) / (2.0 * GRAD_EPS)
        denom = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-6)
        worst = max(worst, float(np.max(np.abs(grad - fd) / denom)))
        tested += 1
    assert worst < GRAD_REL_TOL
    assert time.perf_counter() - start < GRAD_BUDGET_S


# ---------------------------------------------------------------------------
# Physical model
# ---------------------------------------------------------------------------

def test_square_plate_modes_match_closed_form_and_scaling():
    start = time.perf_counter()
    grid = ShapeGrid(np.ones((EIGEN_GRID, EIGEN_GRID), dtype=bool))
    mat = MaterialParams.default()
    base = solve_modes(grid, mat, n_modes=EIGEN_MODES)
    want = plate_analytic_omegas(mat, 0.005, 0.5, EIGEN_MODES)
    rel = np.abs(base.omega - want) / want
    assert rel.max() < EIGEN_REL_TOL

    stiff = solve_modes(grid, dataclasses.replace(mat, E=4.0 * mat.E),
                        n_modes=EIGEN_MODES)
    np.testing.assert_allclose(stiff.omega, 2.0 * base.omega,
                               rtol=SCALING_REL_TOL)
    dense = solve_modes(grid, dataclasses.replace(mat, rho=4.0 * mat.rho),
                        n_modes=EIGEN_MODES)
    np.testing.assert_allclose(dense.omega, 0.5 * base.omega,
                               rtol=SCALING_REL_TOL)
    assert time.perf_counter() - start < EIGEN_BUDGET_S


def test_single_mode_decay_time_matches_damping():
    rng = np.random.default_rng(404)
    nodes = np.array([[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])
    n = int(4.0 * SR)
    impulse = np.zeros(n)
    impulse[0] = 1.0
    for _ in range(T60_DRAWS):
        f0 = float(rng.uniform(150.0, 1500.0))
        alpha = float(rng.uniform(*TRAINING_RANGES["alpha_R"]))
        beta = float(rng.uniform(*TRAINING_RANGES["beta_R"]))
        omega = 2.0 * np.pi * f0
        sigma = 0.5 * (alpha + beta * omega * omega)
        modal = ModalData(omega=np.array([omega]), sigma=np.array([sigma]),
                          shapes=np.ones((1, 4)), node_positions=nodes,
                          interior=np.ones(4, dtype=bool))
        y = render_reference(modal, impulse, (0.5, 0.5), SR)
        env = np.abs(hilbert(y))
        peak = int(np.argmax(env))
        # fit a contiguous post-peak span; the last 5% wraps in the
        # periodic Hilbert kernel and the region below -80 dB is noise
        below = np.nonzero(env[peak:] < env[peak] * 1e-4)[0]
        end = peak + (int(below[0]) if below.size else n - peak)
        end = min(end, int(0.95 * n))
        span = end - peak
        lo = peak + span // 10
        hi = peak + (span * 9) // 10
        t = np.arange(n) / SR
        slope = np.polyfit(t[lo:hi], np.log(env[lo:hi]), 1)[0]
        t60 = np.log(1000.0) / -slope
        expected = 6.91 / sigma
        assert abs(t60 - expected) / expected < T60_REL_TOL


# ---------------------------------------------------------------------------
# Stability under fuzzing
# ---------------------------------------------------------------------------

def test_stability_fuzz_and_live_swaps_stay_finite():
    rng = np.random.default_rng(505)
    done = 0
    while done < FUZZ_SECTIONS:
        raw = rng.normal(0.0, 4.0, size=(5, 2, 50))
        if done % 3 == 0:
            raw *= 10.0  # hammer the saturated ends of the mapping
        coeffs = map_raw_to_coeffs(raw)
        a1, a2 = coeffs[..., 3], coeffs[..., 4]
        assert np.all(np.abs(a2) < 1.0)
        assert np.all(np.abs(a1) < 1.0 + a2)
        done += raw.shape[1] * raw.shape[2]

    hyper = ModelHyper(d_lat=16, branches=32, cascade=2, hidden=32,
                       channels=(4, 8, 8, 8))
    eng = RealtimeEngine(init_weights(hyper, seed=3),
                         EngineConfig(block_size=64, branches=32, cascade=2))
    eng.control_step(SetShape(random_shape(7)))
    out = np.empty(64)
    for i in range(SWAP_BLOCKS):
        if i % 97 == 0:
            eng.control_step(SetShape(random_shape(int(rng.integers(1, 9999)))))
        elif i % 2 == 0:
            eng.control_step(SetMaterial(MaterialParams(
                rho=float(rng.uniform(500.0, 12000.0)),
                E=float(rng.uniform(2.0e9, 2.0e11)),
                nu=float(rng.uniform(0.05, 0.45)),
                alpha_R=float(rng.uniform(0.2, 30.0)),
                beta_R=float(rng.uniform(5.0e-8, 8.0e-6)))))
        else:
            eng.control_step(Hit(float(rng.uniform()), float(rng.uniform()),
                                 amplitude=float(rng.uniform(0.1, 2.0))))
        block = eng.render_block(out)
        assert np.all(np.isfinite(block))


# ---------------------------------------------------------------------------
# Trained model (one shared training run)
# ---------------------------------------------------------------------------

def _dataset_eval(weights, ds):
    """Mean spectral loss plus per-example worst peak-frequency error."""
    freqs = ds.freqs()
    losses = np.empty(len(ds))
    maxerr = np.empty(len(ds))
    for a in range(0, len(ds), 128):
        idx = np.arange(a, min(a + 128, len(ds)))
        latent = encode(weights, ds.grids[idx])
        phi = normalize_material_array(ds.materials[idx])
        raw = predict(weights, latent, ds.positions[idx], phi)
        targets = ds.targets[idx].astype(np.float64)
        losses[idx] = batch_loss(raw, targets, freqs, ds.sample_rate)
        for j, i in enumerate(idx):
            db = frequency_response(map_raw_to_bank(raw[j], ds.sample_rate),
                                    freqs).db
            errs = reports.peak_match_errors(freqs, targets[j], db, 5)
            maxerr[i] = errs.max() if errs.size else np.inf
    return float(losses.mean()), maxerr


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    path = tmp_path_factory.mktemp("accept") / "desk.ds"
    assert cli.main(["dataset", "--out", str(path)]) == 0
    ds = read_dataset(path)
    weights = init_weights(ModelHyper(sample_rate=ds.sample_rate),
                           seed=ACCEPT_TRAIN["seed"])
    loss_initial, _ = _dataset_eval(weights, ds)
    wall0, cpu0 = time.perf_counter(), time.process_time()
    weights, curve, _ = train(ds, TrainConfig(**ACCEPT_TRAIN), weights=weights)
    wall = time.perf_counter() - wall0
    cpu = time.process_time() - cpu0
    loss_final, peak_err = _dataset_eval(weights, ds)
    return SimpleNamespace(ds=ds, weights=weights, curve=curve, wall=wall,
                           cpu=cpu, loss_initial=loss_initial,
                           loss_final=loss_final, peak_err=peak_err)


def test_desk_scale_training_converges_and_matches_peaks(desk_run):
    assert len(desk_run.curve) <= TRAIN_MAX_STEPS
    assert desk_run.cpu < TRAIN_BUDGET_S
    assert desk_run.wall < TRAIN_BUDGET_S
    assert desk_run.loss_final <= TRAIN_LOSS_RATIO * desk_run.loss_initial
    assert float(desk_run.peak_err.max()) <= TRAIN_PEAK_TOL


def test_modulated_render_tracks_physical_reference(desk_run):
    ds = desk_run.ds
    grid = ShapeGrid(ds.grids[0])
    pos = (float(ds.positions[0, 0]), float(ds.positions[0, 1]))
    lo, hi = TRAINING_RANGES["E"]
    schedule = ModulationSchedule({"E": [(0.0, lo), (MOD_DURATION_S, hi)]})
    pulse = kaiser_impulse(64, 8.0)
    x = np.zeros(int(MOD_DURATION_S * SR))
    for k in range(8):
        s = int(k * 0.5 * SR)
        x[s:s + len(pulse)] += pulse

    eng = RealtimeEngine(desk_run.weights, EngineConfig())
    eng.control_step(SetShape(grid))
    eng.control_step(SetMaterial(MaterialParams.default()))
    y_net, _ = eng.render_offline(schedule, excitation=x,
                                  duration=MOD_DURATION_S, position=pos)
    y_ref = render_modulated_reference(grid, schedule, pos, x, hop=1024,
                                       sample_rate=SR)
    f_axis, _, db_net = reports.spectrogram(y_net, SR)
    _, _, db_ref = reports.spectrogram(y_ref, SR)
    assert reports.log_spectrogram_similarity(db_net, db_ref) >= MOD_MIN_COSINE
    for db in (db_net, db_ref):
        track = reports.peak_frequency_track(db, f_axis)
        third = len(track) // 3
        assert track[-third:].mean() > track[:third].mean()


def test_position_sweep_is_smooth_across_boundary(desk_run):
    eng = RealtimeEngine(desk_run.weights, EngineConfig())
    eng.control_step(SetShape(ShapeGrid(desk_run.ds.grids[0])))
    sweep = eng.sweep_position(axis="y", steps=SWEEP_STEPS, fixed=0.5)
    assert sweep.crossings().size >= 2
    deltas = sweep.step_delta[1:]
    interior = deltas[sweep.inside[1:] & sweep.inside[:-1]]
    median = float(np.median(interior))
    assert median > 0.0
    assert float(deltas.max()) <= SWEEP_MAX_RATIO * median


# ---------------------------------------------------------------------------
# Real-time budget
# ---------------------------------------------------------------------------

def test_realtime_render_budget_and_allocation_free_audio_path():
    weights = init_weights(ModelHyper(branches=32, cascade=2), seed=9)
    config = EngineConfig(branches=32, cascade=2, control_rate=RT_CONTROL_HZ)
    eng = RealtimeEngine(weights, config)
    eng.control_step(SetShape(random_shape(5)))
    eng.control_step(SetMaterial(MaterialParams.default()))
    schedule = ModulationSchedule({"E": [(0.0, 1.2e10), (RT_RENDER_S, 4.0e10)],
                                   "y": [(0.0, 0.3), (RT_RENDER_S, 0.7)]})
    x = np.zeros(int(RT_RENDER_S * SR))
    x[::int(SR // 4)] = 1.0
    start = time.perf_counter()
    y, _ = eng.render_offline(schedule, excitation=x, duration=RT_RENDER_S)
    assert time.perf_counter() - start < RT_BUDGET_S
    assert np.all(np.isfinite(y))

    eng2 = RealtimeEngine(weights, config)
    eng2.control_step(SetShape(random_shape(5)))
    eng2.control_step(Hit(0.5, 0.5))
    out = np.empty(config.block_size)
    for _ in range(50):
        eng2.render_block(out)  # warm every lazy path before measuring
    tracemalloc.start()
    base, _ = tracemalloc.get_traced_memory()
    for _ in range(ALLOC_BLOCKS):
        eng2.render_block(out)
    net, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert net - base < ALLOC_NET_B
    assert peak - base < ALLOC_PEAK_B


# ---------------------------------------------------------------------------
# On-disk formats
# ---------------------------------------------------------------------------

def test_file_formats_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1010)

    ds = Dataset(
        grids=np.stack([random_shape(11).cells, random_shape(12).cells]),
        materials=rng.uniform(0.5, 2.0, size=(2, 5)),
        positions=rng.uniform(0.2, 0.8, size=(2, 2)),
        targets=rng.normal(-40.0, 10.0, size=(2, 64)).astype(np.float32),
        sample_rate=44100.0, fmin=25.0, fmax_ratio=0.4)
    d1, d2 = tmp_path / "a.ds", tmp_path / "b.ds"
    write_dataset(d1, ds)
    back = read_dataset(d1)
    write_dataset(d2, back)
    assert d1.read_bytes() == d2.read_bytes()
    np.testing.assert_array_equal(back.targets, ds.targets)
    np.testing.assert_array_equal(back.materials, ds.materials)

    weights = init_weights(ModelHyper(d_lat=8, branches=4, cascade=2,
                                      hidden=16, channels=(2, 4)), seed=2)
    opt = AdamState.for_weights(weights)
    opt.t = 7
    for k in opt.m:
        opt.m[k] += 0.125
    c1, c2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(weights, c1, opt=opt, meta={"steps_completed": 7})
    w2, opt2 = load_checkpoint(c1)
    save_checkpoint(w2, c2, opt=opt2)
    assert c1.read_bytes() == c2.read_bytes()

    g1, g2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
    shape = random_shape(13)
    shape.save_pgm(g1)
    ShapeGrid.load_pgm(g1).save_pgm(g2)
    assert g1.read_bytes() == g2.read_bytes()

    cfg = default_config().with_overrides(
        ["train.steps=77", "material.E.max=4.5e10", "serve.port=9001"])
    text = cfg.canonical()
    assert parse_config(text).canonical() == text

    w1, w2_ = tmp_path / "a.wav", tmp_path / "b.wav"
    samples = rng.normal(0.0, 0.25, size=2048).astype(np.float32)
    write_wav(w1, samples, 44100.0)
    sr_back, back = read_wav(w1)
    assert sr_back == 44100.0
    write_wav(w2_, back, sr_back)
    assert w1.read_bytes() == w2_.read_bytes()
