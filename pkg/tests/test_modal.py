"""Plate model tests: eigenfrequencies, material rescaling, references."""

import numpy as np
import pytest

from platesynth.modal.fem import (
    MaterialParams, ModalData, apply_rayleigh, assemble, eigensolve,
    plate_analytic_omegas, rescale_modal, solve_modes,
)
from platesynth.modal.mesh import triangulate
from platesynth.modal.response import (
    render_modulated_reference, render_reference, target_response,
)
from platesynth.modal.shape import ShapeGrid, random_shape
from platesynth.resonator import log_freq_grid
from platesynth.schedule import ModulationSchedule

MAT = MaterialParams.default()


@pytest.fixture(scope="module")
def blob_modal(blob_grid):
    return solve_modes(blob_grid, MAT, n_modes=16)


def test_material_validation():
    with pytest.raises(ValueError):
        MaterialParams(rho=-1, E=1e10, nu=0.3, alpha_R=1, beta_R=1e-7)
    with pytest.raises(ValueError):
        MaterialParams(rho=1000, E=1e10, nu=0.6, alpha_R=1, beta_R=1e-7)
    with pytest.raises(ValueError):
        MaterialParams(rho=1000, E=1e10, nu=0.3, alpha_R=-1, beta_R=1e-7)


def test_square_plate_matches_kirchhoff():
    grid = ShapeGrid(np.ones((64, 64), dtype=bool))
    modal = solve_modes(grid, MAT, n_modes=10)
    want = plate_analytic_omegas(MAT, 0.005, 0.5, 10)
    rel = np.abs(modal.omega - want) / want
    assert rel.max() < 0.03


def test_omega_scales_with_sqrt_E(blob_grid, blob_modal):
    stiff = MAT.with_values(E=4 * MAT.E)
    modal4 = solve_modes(blob_grid, stiff, n_modes=16)
    ratio = modal4.omega / blob_modal.omega
    np.testing.assert_allclose(ratio, 2.0, rtol=1e-6)


def test_omega_scales_with_inv_sqrt_rho(blob_grid, blob_modal):
    heavy = MAT.with_values(rho=4 * MAT.rho)
    modal4 = solve_modes(blob_grid, heavy, n_modes=16)
    ratio = modal4.omega / blob_modal.omega
    np.testing.assert_allclose(ratio, 0.5, rtol=1e-6)


def test_rescale_matches_direct_solve(blob_grid, blob_modal):
    new = MaterialParams(rho=9000.0, E=3.3e10, nu=0.17, alpha_R=2.0,
                         beta_R=9e-7)
    scaled = rescale_modal(blob_modal, MAT, new)
    direct = solve_modes(blob_grid, new, n_modes=16)
    np.testing.assert_allclose(scaled.omega, direct.omega, rtol=1e-7)
    np.testing.assert_allclose(scaled.sigma, direct.sigma, rtol=1e-7)
    # eigenvectors agree up to sign when the spectrum is non-degenerate
    np.testing.assert_allclose(np.abs(scaled.shapes), np.abs(direct.shapes),
                               rtol=1e-5, atol=1e-8)


def test_rayleigh_damping_formula(blob_modal):
    damped = apply_rayleigh(blob_modal, 3.0, 1.5e-6)
    want = 0.5 * (3.0 + 1.5e-6 * blob_modal.omega ** 2)
    np.testing.assert_allclose(damped.sigma, want, rtol=1e-12)


def test_shapes_mass_orthonormal(blob_grid):
    mesh = triangulate(blob_grid)
    system = assemble(mesh, MAT, 0.005)
    modal = eigensolve(system, n_modes=12)
    phi = modal.shapes[:, system.interior]
    gram = phi @ (system.mass @ phi.T)
    np.testing.assert_allclose(gram, np.eye(12), atol=1e-8)


def test_shapes_vanish_on_boundary(blob_modal):
    outside = ~blob_modal.interior
    assert outside.any()
    assert np.abs(blob_modal.shapes[:, outside]).max() == 0.0


def test_nearest_interior_node(blob_modal):
    idx = blob_modal.nearest_interior_node(0.5, 0.5)
    assert blob_modal.interior[idx]


def test_target_response_peaks_at_mode_frequencies(blob_grid, blob_modal):
    pos = blob_modal.node_positions[blob_modal.nearest_interior_node(0.52, 0.5)]
    freqs = log_freq_grid(2048, 20.0, 44100.0, 0.45)
    resp = target_response(blob_modal, pos, freqs, grid=blob_grid)
    assert resp.db.shape == (2048,)
    f0 = blob_modal.omega[0] / (2 * np.pi)
    near = np.abs(freqs - f0) / f0 < 0.02
    assert resp.db[near].max() > resp.db.mean()


def test_response_warns_outside_position(blob_grid, blob_modal):
    freqs = log_freq_grid(64, 20.0, 44100.0, 0.4)
    with pytest.warns(UserWarning, match="outside"):
        resp = target_response(blob_modal, (0.01, 0.01), freqs, grid=blob_grid)
    assert np.all(np.isfinite(resp.db))


def test_single_mode_decay_time(blob_modal):
    one = ModalData(omega=blob_modal.omega[:1], sigma=np.array([40.0]),
                    shapes=blob_modal.shapes[:1],
                    node_positions=blob_modal.node_positions,
                    interior=blob_modal.interior)
    pos = one.node_positions[one.nearest_interior_node(0.5, 0.5)]
    sr = 44100.0
    imp = np.zeros(int(sr)); imp[0] = 1.0
    y = render_reference(one, imp, pos, sr)
    env = np.abs(y)
    # fit log|peak| decay over a clean window
    peaks = []
    hop = 512
    for i in range(0, len(y) - hop, hop):
        peaks.append(env[i:i + hop].max())
    peaks = np.array(peaks)
    live = peaks > peaks.max() * 1e-4
    t = (np.arange(len(peaks)) * hop + hop / 2) / sr
    slope = np.polyfit(t[live], np.log(peaks[live]), 1)[0]
    t60 = -np.log(1000.0) / slope
    assert t60 == pytest.approx(6.9078 / 40.0, rel=0.05)


def test_constant_schedule_reproduces_reference(blob_grid, blob_modal):
    pos = blob_modal.node_positions[blob_modal.nearest_interior_node(0.5, 0.48)]
    sr = 8000.0
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, 4000)
    sched = ModulationSchedule({})
    got = render_modulated_reference(blob_grid, sched, pos, x, hop=256,
                                     sample_rate=sr, base_material=MAT,
                                     n_modes=16)
    want = render_reference(blob_modal, x, pos, sr)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-9 * np.abs(want).max())
