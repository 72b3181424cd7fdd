"""Command-line tests: exit codes, determinism, artifact presence."""

import subprocess

import numpy as np
import pytest

from platesynth.audiofile import read_wav

TINY_CFG = """\
dataset.positions = 4
dataset.materials = 2
dataset.n_bins = 256
dataset.n_modes = 24
model.d_lat = 16
model.hidden = 32
bank.branches = 8
train.steps = 20
train.batch_size = 8
"""


def run(*args, code=0):
    r = subprocess.run(["platesynth", *args], capture_output=True, text=True)
    assert r.returncode == code, (
        f"platesynth {' '.join(map(str, args))} -> rc {r.returncode}, "
        f"wanted {code}\nstdout: {r.stdout[-500:]}\nstderr: {r.stderr[-500:]}")
    return r


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "tiny.cfg").write_text(TINY_CFG)
    return d


@pytest.fixture(scope="module")
def dataset(workdir):
    out = workdir / "tiny.ds"
    r = run("--config", str(workdir / "tiny.cfg"), "dataset", "--out", str(out))
    assert "wrote 8 examples" in r.stdout
    return out


@pytest.fixture(scope="module")
def checkpoint(workdir, dataset):
    out = workdir / "tiny.ckpt"
    run("--config", str(workdir / "tiny.cfg"), "train",
        "--dataset", str(dataset), "--out", str(out))
    return out


def test_dataset_regeneration_is_bit_identical(workdir, dataset):
    again = workdir / "tiny_again.ds"
    run("--config", str(workdir / "tiny.cfg"), "dataset", "--out", str(again))
    assert again.read_bytes() == dataset.read_bytes()


def test_train_writes_curve_and_resume_extends(workdir, dataset, checkpoint):
    curve = checkpoint.parent / (checkpoint.name + ".curve.csv")
    assert curve.exists()
    assert len(curve.read_text().strip().splitlines()) == 21  # header + steps

    more = workdir / "more.ckpt"
    run("--config", str(workdir / "tiny.cfg"), "--set", "train.steps=30",
        "train", "--dataset", str(dataset), "--out", str(more),
        "--resume", str(checkpoint))
    curve2 = more.parent / (more.name + ".curve.csv")
    assert len(curve2.read_text().strip().splitlines()) == 11  # the 10 new steps

    # resuming past the configured horizon is a config error
    run("--config", str(workdir / "tiny.cfg"), "train",
        "--dataset", str(dataset), "--out", str(workdir / "no.ckpt"),
        "--resume", str(checkpoint), code=2)


def test_eval_report_writes_csv_and_figures(workdir, dataset, checkpoint):
    out = workdir / "report"
    run("--config", str(workdir / "tiny.cfg"), "eval", "report",
        "--checkpoint", str(checkpoint), "--dataset", str(dataset),
        "--out", str(out))
    rows = (out / "report.csv").read_text().strip().splitlines()
    assert rows[0].startswith("example,")
    assert len(rows) == 9
    assert (out / "response_best.png").stat().st_size > 1000


def test_eval_fig4_sweep(workdir, dataset, checkpoint):
    out = workdir / "fig4"
    run("--config", str(workdir / "tiny.cfg"), "eval", "fig4",
        "--checkpoint", str(checkpoint), "--dataset", str(dataset),
        "--out", str(out), "--steps", "33")
    rows = (out / "fig4_sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 34
    summary = (out / "fig4_summary.csv").read_text()
    assert "boundary_ratio" in summary


def test_render_scene(workdir, dataset, checkpoint):
    scene = workdir / "scene.json"
    scene.write_text("""
    {"duration": 0.3, "seed": 11,
     "hits": [{"t": 0.02, "x": 0.45, "y": 0.55, "amplitude": 1.0}]}
    """)
    wav = workdir / "out.wav"
    run("--config", str(workdir / "tiny.cfg"), "render",
        "--checkpoint", str(checkpoint), "--scene", str(scene),
        "--out", str(wav))
    sr, audio = read_wav(wav)
    assert sr == 44100.0
    assert len(audio) == int(0.3 * 44100)
    assert np.abs(audio).max() > 0


def test_render_rejects_unknown_scene_key(workdir, checkpoint):
    scene = workdir / "bad_scene.json"
    scene.write_text('{"duration": 0.1, "seed": 1, "wavelength": 3}')
    run("--config", str(workdir / "tiny.cfg"), "render",
        "--checkpoint", str(checkpoint), "--scene", str(scene),
        "--out", str(workdir / "no.wav"), code=2)


def test_unknown_config_key_is_config_error(workdir):
    bad = workdir / "bad.cfg"
    bad.write_text("dataset.size = 3\n")
    run("--config", str(bad), "dataset", "--out", str(workdir / "no.ds"),
        code=2)


def test_missing_checkpoint_is_runtime_error(workdir, dataset):
    run("--config", str(workdir / "tiny.cfg"), "eval", "fig4",
        "--checkpoint", str(workdir / "absent.ckpt"),
        "--dataset", str(dataset), "--out", str(workdir / "x"), code=3)
