"""Command-line interface.

Subcommands: dataset, train, eval (report / fig2 / fig3 / fig4),
render, serve.  Global flags --config FILE and --set key=value come
before the subcommand.  Exit codes: 0 success, 2 configuration error
(bad flags, config text, or scene spec), 3 runtime error (missing or
corrupt artifacts, non-finite audio, I/O failures).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import numpy as np

from . import reports
from .audiofile import write_wav
from .dataset import Dataset, read_dataset, write_dataset
from .engine import EngineConfig, EngineError, RealtimeEngine, SetMaterial, SetShape
from .excitation import ImpulseSpec, ScrapeState, draw_impulse, fractal_texture, kaiser_impulse, scrape_force
from .modal.fem import MaterialParams, rescale_modal, solve_modes
from .modal.response import render_modulated_reference, target_response
from .modal.shape import ShapeGrid, random_shape
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.model import ModelHyper, encode, predict
from .neural.normalize import MATERIAL_ORDER, normalize_material_array
from .neural.train import TrainConfig, train
from .resonator import FilterBank, batch_loss, frequency_response, log_freq_grid, map_raw_to_coeffs
from .runconfig import ConfigError, RunConfig, default_config, load_config
from .schedule import ModulationSchedule
from .service import run_service

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _material_ranges(cfg: RunConfig) -> dict[str, tuple[float, float]]:
    out = {}
    for key in MATERIAL_ORDER:
        lo = float(cfg[f"material.{key}.min"])
        hi = float(cfg[f"material.{key}.max"])
        if not lo < hi:
            raise ConfigError(f"material.{key}: min must be below max")
        out[key] = (lo, hi)
    return out


def _engine_config(cfg: RunConfig, weights) -> EngineConfig:
    return EngineConfig.for_weights(
        weights,
        block_size=int(cfg["audio.block_size"]),
        control_rate=float(cfg["engine.control_rate"]),
        crossfade_blocks=int(cfg["engine.crossfade_blocks"]),
    )


def _load_pair(args):
    weights, _ = load_checkpoint(args.checkpoint)
    ds = read_dataset(args.dataset)
    if weights.hyper.sample_rate != ds.sample_rate:
        raise ConfigError(
            f"checkpoint sample rate {weights.hyper.sample_rate:g} does not "
            f"match dataset {ds.sample_rate:g}"
        )
    return weights, ds


def _dataset_shape(ds: Dataset, example: int) -> tuple[ShapeGrid, tuple[float, float]]:
    if not 0 <= example < len(ds):
        raise ConfigError(f"example {example} out of range 0..{len(ds) - 1}")
    grid = ShapeGrid(ds.grids[example])
    pos = (float(ds.positions[example, 0]), float(ds.positions[example, 1]))
    return grid, pos


def _impulse_train(duration: float, sample_rate: float,
                   every: float = 0.25) -> np.ndarray:
    """Kaiser strikes at a fixed interval, peak 1, first at t=0."""
    n = int(round(duration * sample_rate))
    pulse = kaiser_impulse(ImpulseSpec())
    exc = np.zeros(n)
    k = 0
    while True:
        s = int(round(k * every * sample_rate))
        if s >= n:
            break
        m = min(len(pulse), n - s)
        exc[s:s + m] += pulse[:m]
        k += 1
    return exc


def _track_slope(db: np.ndarray, freqs: np.ndarray, times: np.ndarray) -> float:
    """Slope in Hz/s of the strongest-bin track over the active frames."""
    track = reports.peak_frequency_track(db, freqs)
    active = db.max(axis=0) > db.max() - 40.0
    if active.sum() < 2:
        return 0.0
    return float(np.polyfit(times[active], track[active], 1)[0])


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

def cmd_dataset(args, cfg: RunConfig) -> int:
    sr = float(cfg["audio.sample_rate"])
    freqs = log_freq_grid(int(cfg["dataset.n_bins"]), float(cfg["dataset.fmin"]),
                          sr, float(cfg["dataset.fmax_ratio"]))
    ranges = _material_ranges(cfg)
    seed = int(cfg["dataset.seed"])
    rng = np.random.default_rng(seed)
    n_shapes = int(cfg["dataset.shapes"])
    n_mats = int(cfg["dataset.materials"])
    n_pos = int(cfg["dataset.positions"])
    if min(n_shapes, n_mats, n_pos) < 1:
        raise ConfigError("dataset.shapes/materials/positions must be >= 1")
    thickness = float(cfg["plate.thickness"])
    size = float(cfg["plate.size"])
    n_modes = int(cfg["dataset.n_modes"])
    ref = MaterialParams.default()

    grids, mats, poss, targs = [], [], [], []
    for s in range(n_shapes):
        grid = random_shape(seed + s)
        base = solve_modes(grid, ref, thickness, size, n_modes)
        nodes = base.node_positions[base.interior]
        if len(nodes) >= n_pos:
            pick = rng.choice(len(nodes), size=n_pos, replace=False)
        else:
            pick = rng.integers(0, len(nodes), size=n_pos)
        points = nodes[pick]
        for _ in range(n_mats):
            draw = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in ranges.items()}
            mat = MaterialParams(**draw)
            modal = rescale_modal(base, ref, mat, thickness, thickness)
            for p in points:
                resp = target_response(modal, p, freqs, sr, grid=grid)
                grids.append(grid.cells)
                mats.append([getattr(mat, k) for k in MATERIAL_ORDER])
                poss.append(p)
                targs.append(resp.db)

    ds = Dataset(
        grids=np.array(grids), materials=np.array(mats),
        positions=np.array(poss), targets=np.array(targs, dtype=np.float32),
        sample_rate=sr, fmin=float(cfg["dataset.fmin"]),
        fmax_ratio=float(cfg["dataset.fmax_ratio"]),
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(args.out, ds)
    print(f"wrote {len(ds)} examples ({n_shapes} shapes x {n_mats} materials "
          f"x {n_pos} positions) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args, cfg: RunConfig) -> int:
    ds = read_dataset(args.dataset)
    steps = int(cfg["train.steps"])
    weights = opt = None
    start = 0
    if args.resume is not None:
        weights, opt = load_checkpoint(args.resume)
        start = int(weights.meta.get("steps_completed", 0))
        if steps <= start:
            raise ConfigError(
                f"checkpoint already trained for {start} steps; raise "
                f"train.steps above that to resume"
            )
    flr = float(cfg["train.final_learning_rate"])
    tc = TrainConfig(
        learning_rate=float(cfg["train.learning_rate"]),
        batch_size=int(cfg["train.batch_size"]),
        steps=steps - start,
        seed=int(cfg["train.seed"]),
        final_learning_rate=flr if flr > 0.0 else None,
        freq_warmup_steps=int(cfg["train.freq_warmup_steps"]),
    )
    hyper = ModelHyper(
        d_lat=int(cfg["model.d_lat"]), branches=int(cfg["bank.branches"]),
        cascade=int(cfg["bank.cascade"]), hidden=int(cfg["model.hidden"]),
        sample_rate=ds.sample_rate,
    )
    weights, curve, opt = train(ds, tc, weights=weights, opt=opt,
                                start_step=start,
                                hyper=None if weights is not None else hyper)
    meta = {
        "steps_completed": start + len(curve),
        "final_loss": float(curve[-1]) if len(curve) else None,
        "train_seed": tc.seed,
        "config": cfg.canonical(),
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(weights, args.out, opt=opt, meta=meta)
    curve_path = args.curve if args.curve is not None \
        else Path(str(args.out) + ".curve.csv")
    reports.loss_curve_csv(curve_path, curve)
    final = f"{curve[-1]:.4f}" if len(curve) else "n/a"
    print(f"trained {len(curve)} steps (total {start + len(curve)}), "
          f"final loss {final}; checkpoint {args.out}, curve {curve_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _predicted_responses(weights, ds: Dataset, chunk: int = 64):
    """Per-example spectral loss and predicted dB response."""
    freqs = ds.freqs()
    n = len(ds)
    losses = np.empty(n)
    pred_db = np.empty((n, len(freqs)))
    for lo in range(0, n, chunk):
        idx = np.arange(lo, min(lo + chunk, n))
        latent = encode(weights, ds.grids[idx].astype(np.float64))
        phi = normalize_material_array(ds.materials[idx])
        raw = predict(weights, latent, ds.positions[idx], phi)
        losses[idx] = batch_loss(raw, ds.targets[idx].astype(np.float64),
                                 freqs, ds.sample_rate)
        coeffs = map_raw_to_coeffs(raw)
        for j, i in enumerate(idx):
            bank = FilterBank(coeffs[j], ds.sample_rate)
            pred_db[i] = frequency_response(bank, freqs).db
    return freqs, losses, pred_db


def cmd_eval_report(args, cfg: RunConfig) -> int:
    weights, ds = _load_pair(args)
    freqs, losses, pred_db = _predicted_responses(weights, ds)
    out = Path(args.out_dir)

    rows = []
    max_errs = np.empty(len(ds))
    for i in range(len(ds)):
        errs = reports.peak_match_errors(freqs, ds.targets[i].astype(np.float64),
                                         pred_db[i], n=5)
        max_errs[i] = errs.max() if errs.size else np.inf
        matched = int((errs <= 0.02).sum())
        rows.append((i, repr(float(losses[i])), errs.size, matched,
                     repr(float(max_errs[i]))))
    reports.write_csv(out / "report.csv",
                      ["example", "loss", "peaks", "peaks_within_2pct",
                       "max_peak_rel_err"], rows)

    order = np.argsort(losses)
    shown = {"best": order[0], "median": order[len(order) // 2],
             "worst": order[-1]}
    for label, i in shown.items():
        reports.fig_response_overlay(
            out / f"response_{label}.png", freqs,
            ds.targets[i].astype(np.float64), pred_db[i],
            title=f"example {i} ({label}), loss {losses[i]:.2f}")

    print(f"mean loss {losses.mean():.4f}, median max peak error "
          f"{np.median(max_errs):.4%}, "
          f"report.csv and {len(shown)} overlays in {out}")
    return EXIT_OK


def cmd_eval_fig2(args, cfg: RunConfig) -> int:
    weights, ds = _load_pair(args)
    grid, pos = _dataset_shape(ds, args.example)
    sr = float(ds.sample_rate)
    base = MaterialParams.default()
    e0 = float(cfg["material.E.min"]) if args.e_start is None else args.e_start
    e1 = float(cfg["material.E.max"]) if args.e_end is None else args.e_end
    dur = args.duration
    points = [(0.0, e0)] if e0 == e1 else [(0.0, e0), (dur, e1)]
    sched = ModulationSchedule({"E": points})
    exc = _impulse_train(dur, sr)

    engine = RealtimeEngine(weights, _engine_config(cfg, weights))
    engine.control_step(SetShape(grid))
    engine.control_step(SetMaterial(base))
    pred, log = engine.render_offline(sched, exc, dur, position=pos)
    ref = render_modulated_reference(
        grid, sched, pos, exc, hop=args.hop, sample_rate=sr,
        base_material=base, thickness=float(cfg["plate.thickness"]),
        physical_size=float(cfg["plate.size"]),
        n_modes=int(cfg["dataset.n_modes"]),
    )

    spec_p = reports.spectrogram(pred, sr)
    spec_r = reports.spectrogram(ref, sr)
    sim = reports.log_spectrogram_similarity(spec_p[2], spec_r[2])
    slope_p = _track_slope(spec_p[2], spec_p[0], spec_p[1])
    slope_r = _track_slope(spec_r[2], spec_r[0], spec_r[1])

    out = Path(args.out_dir)
    reports.fig_spectrogram_pair(out / "fig2.png", spec_p, spec_r,
                                 labels=("network", "modal reference"),
                                 similarity=sim, fmax=8000.0)
    reports.write_csv(out / "fig2_summary.csv",
                      ["similarity", "net_peak_slope_hz_per_s",
                       "ref_peak_slope_hz_per_s", "E_start", "E_end",
                       "duration_s"],
                      [(repr(sim), repr(slope_p), repr(slope_r), repr(e0),
                        repr(e1), repr(dur))])
    track_rows = zip(spec_p[1],
                     reports.peak_frequency_track(spec_p[2], spec_p[0]),
                     reports.peak_frequency_track(spec_r[2], spec_r[0]))
    reports.write_csv(out / "fig2_peaks.csv",
                      ["t", "net_peak_hz", "ref_peak_hz"],
                      ((repr(float(a)), repr(float(b)), repr(float(c)))
                       for a, b, c in track_rows))
    reports.coefficient_log_csv(out / "fig2_coeffs.csv", log)
    print(f"similarity {sim:.3f}, peak slopes net {slope_p:+.1f} Hz/s, "
          f"reference {slope_r:+.1f} Hz/s; outputs in {out}")
    return EXIT_OK


def cmd_eval_fig3(args, cfg: RunConfig) -> int:
    weights, ds = _load_pair(args)
    grid, pos = _dataset_shape(ds, args.example)
    sr = float(ds.sample_rate)
    dur = args.duration
    ranges = _material_ranges(cfg)

    # ramp every parameter from below its training range to above it,
    # clamped only where physics demands it
    breakpoints = {}
    endpoints = []
    for key, (lo, hi) in ranges.items():
        span = hi - lo
        v0 = lo - 0.2 * span
        v1 = hi + 0.2 * span
        if key in ("rho", "E"):
            v0 = max(v0, 0.02 * lo)
        elif key == "nu":
            v0 = max(v0, 0.0)
            v1 = min(v1, 0.49)
        else:
            v0 = max(v0, 0.0)
        breakpoints[key] = [(0.0, v0), (dur, v1)]
        endpoints.append((key, repr(v0), repr(v1)))
    sched = ModulationSchedule(breakpoints)
    exc = _impulse_train(dur, sr)

    engine = RealtimeEngine(weights, _engine_config(cfg, weights))
    engine.control_step(SetShape(grid))
    audio, log = engine.render_offline(sched, exc, dur, position=pos)

    out = Path(args.out_dir)
    spec = reports.spectrogram(audio, sr)
    reports.fig_spectrogram(out / "fig3.png", spec,
                            title="all parameters ramped past the training "
                                  "range", fmax=8000.0)
    reports.write_csv(out / "fig3_ramps.csv", ["param", "start", "end"],
                      endpoints)
    reports.coefficient_log_csv(out / "fig3_coeffs.csv", log)
    print(f"rendered {dur:g}s extrapolation ramp; outputs in {out}")
    return EXIT_OK


def cmd_eval_fig4(args, cfg: RunConfig) -> int:
    weights, ds = _load_pair(args)
    grid, _ = _dataset_shape(ds, args.example)
    engine = RealtimeEngine(weights, _engine_config(cfg, weights))
    engine.control_step(SetShape(grid))
    sweep = engine.sweep_position(args.axis, args.steps, args.fixed)
    ratio = sweep.boundary_ratio()

    out = Path(args.out_dir)
    reports.sweep_csv(out / "fig4_sweep.csv", sweep)
    reports.fig_sweep(out / "fig4.png", sweep)
    interior = sweep.step_delta[1:][sweep.inside[1:] & sweep.inside[:-1]]
    med = float(np.median(interior)) if interior.size else float("nan")
    reports.write_csv(out / "fig4_summary.csv",
                      ["axis", "steps", "boundary_ratio", "max_step",
                       "interior_median_step"],
                      [(sweep.axis, args.steps, repr(ratio),
                        repr(float(sweep.step_delta[1:].max())), repr(med))])
    print(f"sweep along {args.axis}: max step / interior median = "
          f"{ratio:.2f}; outputs in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# render
# ---------------------------------------------------------------------------

_SCENE_KEYS = {"duration", "seed", "shape_pgm", "material", "position",
               "texture", "impulse", "hits", "scrape", "schedule"}


def _load_scene(path: Path) -> dict:
    try:
        scene = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scene {path}: {exc}") from exc
    if not isinstance(scene, dict):
        raise ConfigError("scene must be a JSON object")
    unknown = set(scene) - _SCENE_KEYS
    if unknown:
        raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
    if "seed" not in scene and "shape_pgm" not in scene:
        raise ConfigError("scene needs a shape: give 'seed' or 'shape_pgm'")
    return scene


def _scene_excitation(scene: dict, n: int, sr: float) -> np.ndarray:
    exc = np.zeros(n)
    custom = None
    if scene.get("impulse") is not None:
        custom = draw_impulse(scene["impulse"])
    for hit in scene.get("hits", []):
        extra = set(hit) - {"t", "x", "y", "beta_K", "amplitude"}
        if extra:
            raise ConfigError(f"unknown hit keys: {sorted(extra)}")
        amp = float(hit.get("amplitude", 1.0))
        if custom is None:
            pulse = kaiser_impulse(ImpulseSpec(beta_K=float(hit.get("beta_K", 6.0)),
                                               amplitude=amp))
        else:
            pulse = amp * custom
        s = int(round(float(hit["t"]) * sr))
        if not 0 <= s < n:
            raise ConfigError(f"hit at t={hit['t']} outside the render")
        m = min(len(pulse), n - s)
        exc[s:s + m] += pulse[:m]
    states = scene.get("scrape", [])
    if states:
        if "texture" not in scene:
            raise ConfigError("scrape events need a scene texture")
        tex_spec = scene["texture"]
        tex = fractal_texture(float(tex_spec["roughness"]),
                              size=int(tex_spec.get("size", 256)),
                              seed=int(tex_spec.get("seed", 0)))
        try:
            traj = [ScrapeState(x=float(s_["x"]), y=float(s_["y"]),
                                t=float(s_["t"]), m_p=float(s_.get("m_p", 0.01)),
                                mix_v=float(s_.get("mix_v", 1.0)),
                                mix_h=float(s_.get("mix_h", 1.0)))
                    for s_ in states]
            force = scrape_force(tex, traj, sr)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad scrape trajectory: {exc}") from exc
        s = int(round(traj[0].t * sr))
        if not 0 <= s < n:
            raise ConfigError("scrape trajectory starts outside the render")
        m = min(len(force), n - s)
        exc[s:s + m] += force[:m]
    return exc


def cmd_render(args, cfg: RunConfig) -> int:
    scene = _load_scene(args.scene)
    weights, _ = load_checkpoint(args.checkpoint)
    engine = RealtimeEngine(weights, _engine_config(cfg, weights))

    if "shape_pgm" in scene:
        grid = ShapeGrid.load_pgm(scene["shape_pgm"])
    else:
        grid = random_shape(int(scene["seed"]))
    engine.control_step(SetShape(grid))
    try:
        mat = MaterialParams.default().with_values(**scene.get("material", {}))
    except TypeError as exc:
        raise ConfigError(f"bad scene material: {exc}") from exc
    engine.control_step(SetMaterial(mat))

    sr = engine.config.sample_rate
    duration = float(scene.get("duration", cfg["render.duration"]))
    n = int(round(duration * sr))
    if n <= 0:
        raise ConfigError("scene duration must be positive")
    exc = _scene_excitation(scene, n, sr)
    try:
        sched = ModulationSchedule(
            {k: [tuple(p) for p in v] for k, v in scene.get("schedule", {}).items()})
    except (ValueError, TypeError) as exc_:
        raise ConfigError(f"bad scene schedule: {exc_}") from exc_
    position = scene.get("position")
    if position is not None:
        position = (float(position[0]), float(position[1]))

    audio, log = engine.render_offline(sched, exc, duration, position=position)
    if not np.all(np.isfinite(audio)):
        print("error: render produced non-finite samples", file=sys.stderr)
        return EXIT_RUNTIME
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_wav(args.out, audio, sr)
    if args.coeff_log is not None:
        reports.coefficient_log_csv(args.coeff_log, log)
    rms = float(np.sqrt(np.mean(audio ** 2)))
    print(f"wrote {duration:g}s ({n} samples) to {args.out}, rms {rms:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args, cfg: RunConfig) -> int:
    weights, _ = load_checkpoint(args.checkpoint)
    ecfg = _engine_config(cfg, weights)
    host = str(cfg["serve.host"])
    port = int(cfg["serve.port"])
    try:
        asyncio.run(run_service(weights, host, port, ecfg, announce=True))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="platesynth",
        description="Neural resonator workbench: datasets, training, "
                    "evaluation figures, offline rendering, live service.")
    p.add_argument("--config", type=Path, default=None,
                   help="run configuration file (flat key = value lines)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   dest="overrides", help="override one config value")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dataset", help="generate a training dataset")
    d.add_argument("--out", type=Path, required=True)
    d.set_defaults(func=cmd_dataset)

    t = sub.add_parser("train", help="train a checkpoint on a dataset")
    t.add_argument("--dataset", type=Path, required=True)
    t.add_argument("--out", type=Path, required=True)
    t.add_argument("--curve", type=Path, default=None,
                   help="loss curve CSV (default: <out>.curve.csv)")
    t.add_argument("--resume", type=Path, default=None,
                   help="continue training from this checkpoint")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluation reports and figures")
    esub = e.add_subparsers(dest="mode", required=True)

    def eval_common(sp):
        sp.add_argument("--checkpoint", type=Path, required=True)
        sp.add_argument("--dataset", type=Path, required=True)
        sp.add_argument("--out-dir", type=Path, required=True)

    er = esub.add_parser("report", help="per-example loss and peak errors")
    eval_common(er)
    er.set_defaults(func=cmd_eval_report)

    e2 = esub.add_parser("fig2", help="stiffness ramp vs modal reference "
                                      "spectrograms")
    eval_common(e2)
    e2.add_argument("--example", type=int, default=0,
                    help="dataset example supplying shape and position")
    e2.add_argument("--duration", type=float, default=4.0)
    e2.add_argument("--e-start", type=float, default=None)
    e2.add_argument("--e-end", type=float, default=None)
    e2.add_argument("--hop", type=int, default=1024,
                    help="overlap-add hop of the modal reference")
    e2.set_defaults(func=cmd_eval_fig2)

    e3 = esub.add_parser("fig3", help="all-parameter extrapolation ramp")
    eval_common(e3)
    e3.add_argument("--example", type=int, default=0)
    e3.add_argument("--duration", type=float, default=4.0)
    e3.set_defaults(func=cmd_eval_fig3)

    e4 = esub.add_parser("fig4", help="coefficient statistics along a "
                                      "position sweep")
    eval_common(e4)
    e4.add_argument("--example", type=int, default=0)
    e4.add_argument("--axis", choices=("x", "y"), default="y")
    e4.add_argument("--steps", type=int, default=257)
    e4.add_argument("--fixed", type=float, default=0.5)
    e4.set_defaults(func=cmd_eval_fig4)

    r = sub.add_parser("render", help="render a JSON scene to WAV")
    r.add_argument("--checkpoint", type=Path, required=True)
    r.add_argument("--scene", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--coeff-log", type=Path, default=None,
                   help="also write the per-tick coefficient CSV here")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("serve", help="run the websocket service")
    s.add_argument("--checkpoint", type=Path, required=True)
    s.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config is not None \
            else default_config()
        cfg = cfg.with_overrides(args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EngineError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
