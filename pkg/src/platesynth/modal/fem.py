"""Thin-plate finite elements on the cell-triangle mesh.

Model: Kirchhoff plate, simply supported on the outline (w = 0).  The
biharmonic operator is approximated by sandwiching the linear-element
Laplacian around a lumped mass inverse, with the boundary eliminated
BEFORE the sandwich; for that ordering the square-plate eigenvalues are
exactly the squared Dirichlet-Laplacian ones, matching the closed-form
simply-supported plate line ω_mn = √(D/ρh)·π²(m²+n²)/a².

Both Mass and Stiffness scale by plain scalars in the material (ρh and
D = Eh³/12(1−ν²)), so changing the material rescales an existing solve
exactly instead of triggering a new one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .mesh import TriMesh, triangulate
from .shape import ShapeGrid

# Sampling ranges used for training data and slider bounds.
TRAINING_RANGES = {
    "rho": (500.0, 15000.0),
    "E": (8.0e9, 5.0e10),
    "nu": (0.1, 0.4),
    "alpha_R": (1.0, 10.0),
    "beta_R": (3.0e-7, 2.0e-6),
}

DEFAULT_THICKNESS = 0.005
DEFAULT_EXTENT = 0.5


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic plate material plus Rayleigh damping coefficients.

    Values outside TRAINING_RANGES are allowed (extrapolation play);
    only physically meaningless values are rejected.
    """

    rho: float
    E: float
    nu: float
    alpha_R: float
    beta_R: float

    def __post_init__(self):
        if not (self.rho > 0 and self.E > 0):
            raise ValueError("rho and E must be positive")
        if not (0.0 <= self.nu < 0.5):
            raise ValueError(f"nu must be in [0, 0.5), got {self.nu}")
        if self.alpha_R < 0 or self.beta_R < 0:
            raise ValueError("damping coefficients must be non-negative")

    @classmethod
    def default(cls) -> "MaterialParams":
        return cls(rho=2700.0, E=2.0e10, nu=0.3, alpha_R=5.0, beta_R=1.0e-6)

    @property
    def in_training_range(self) -> bool:
        vals = {"rho": self.rho, "E": self.E, "nu": self.nu,
                "alpha_R": self.alpha_R, "beta_R": self.beta_R}
        return all(lo <= vals[k] <= hi for k, (lo, hi) in TRAINING_RANGES.items())

    def with_values(self, **kw) -> "MaterialParams":
        return replace(self, **kw)


def flexural_rigidity(mat: MaterialParams, thickness: float) -> float:
    return mat.E * thickness ** 3 / (12.0 * (1.0 - mat.nu ** 2))


@dataclass(frozen=True)
class PlateSystem:
    """Assembled interior-DOF matrices plus the bookkeeping to map back."""

    mass: sp.csr_matrix       # ρh·M₀ restricted to interior vertices
    stiffness: sp.csr_matrix  # D·L M_lump⁻¹ L, boundary eliminated first
    interior: np.ndarray      # vertex ids of the interior DOFs
    mesh: TriMesh
    material: MaterialParams
    thickness: float


def _geometry_matrices(mesh: TriMesh):
    """Material-free Laplacian stiffness L and consistent mass M0."""
    tri = mesh.triangles.astype(np.int64)
    p = mesh.vertices[tri]                       # (n_t, 3, 2)
    x, y = p[..., 0], p[..., 1]
    area2 = ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
             - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(area2 <= 0):
        raise ValueError("degenerate or flipped triangle in mesh")
    area = 0.5 * area2

    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    ke /= (4.0 * area)[:, None, None]
    me = (np.ones((3, 3)) + np.eye(3)) / 12.0 * area[:, None, None]

    n = mesh.n_vertices
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    lap = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    m0 = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return lap, m0


def assemble(mesh: TriMesh, mat: MaterialParams,
             thickness: float = DEFAULT_THICKNESS) -> PlateSystem:
    if thickness <= 0:
        raise ValueError("thickness must be positive")
    lap, m0 = _geometry_matrices(mesh)
    interior = np.nonzero(~mesh.boundary)[0]
    if interior.size == 0:
        raise ValueError("shape has no interior vertices")

    lap_ii = lap[interior][:, interior].tocsr()
    m0_ii = m0[interior][:, interior].tocsr()
    m_lump = np.asarray(m0.sum(axis=1)).ravel()[interior]

    d = flexural_rigidity(mat, thickness)
    stiff = d * (lap_ii @ sp.diags(1.0 / m_lump) @ lap_ii)
    stiff = (stiff + stiff.T) * 0.5
    mass = (mat.rho * thickness) * m0_ii
    return PlateSystem(mass=mass.tocsr(), stiffness=stiff.tocsr(),
                       interior=interior, mesh=mesh, material=mat,
                       thickness=thickness)


@dataclass(frozen=True)
class ModalData:
    """Eigenmodes of a plate: frequencies, decay rates, shapes.

    shapes rows are mass-orthonormal and include boundary vertices
    (identically zero there).  node_positions live in the [0,1]² window.
    """

    omega: np.ndarray           # (k,) rad/s, ascending
    sigma: np.ndarray           # (k,) 1/s
    shapes: np.ndarray          # (k, n_nodes)
    node_positions: np.ndarray  # (n_nodes, 2) in [0,1]²
    interior: np.ndarray        # (n_nodes,) bool

    @property
    def n_modes(self) -> int:
        return self.omega.shape[0]

    def nearest_interior_node(self, x: float, y: float) -> int:
        pts = self.node_positions
        d2 = (pts[:, 0] - x) ** 2 + (pts[:, 1] - y) ** 2
        d2 = np.where(self.interior, d2, np.inf)
        return int(np.argmin(d2))


def eigensolve(system: PlateSystem, n_modes: int = 32,
               method: str = "auto") -> ModalData:
    """Smallest n_modes of K φ = ω² M φ, mass-normalized, ascending.

    method: 'dense' (eigh on full matrices, O(n³)), 'sparse'
    (shift-invert Lanczos at σ=0), or 'auto' (sparse above 800 DOFs).
    """
    n = system.stiffness.shape[0]
    if not (0 < n_modes <= n):
        raise ValueError(f"n_modes must be in 1..{n}, got {n_modes}")
    if method == "auto":
        method = "sparse" if n > 800 and n_modes < n // 2 else "dense"

    if method == "dense":
        w, v = scipy.linalg.eigh(system.stiffness.toarray(),
                                 system.mass.toarray(),
                                 subset_by_index=[0, n_modes - 1])
    elif method == "sparse":
        # fixed start vector keeps the Lanczos run deterministic
        v0 = np.random.default_rng(0x5EED).standard_normal(n)
        w, v = sp.linalg.eigsh(system.stiffness.tocsc(), k=n_modes,
                               M=system.mass.tocsc(), sigma=0, which="LM",
                               v0=v0)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")

    # enforce mass-orthonormality exactly (degenerate pairs included)
    gram = v.T @ (system.mass @ v)
    v = v @ np.linalg.inv(np.linalg.cholesky(gram).T)

    # deterministic sign: largest-magnitude entry positive
    peak = np.argmax(np.abs(v), axis=0)
    v *= np.sign(v[peak, np.arange(v.shape[1])])

    omega = np.sqrt(np.clip(w, 0.0, None))
    shapes = np.zeros((n_modes, system.mesh.n_vertices))
    shapes[:, system.interior] = v.T

    interior_mask = np.zeros(system.mesh.n_vertices, dtype=bool)
    interior_mask[system.interior] = True
    return ModalData(omega=omega, sigma=np.zeros(n_modes), shapes=shapes,
                     node_positions=system.mesh.normalized_vertices(),
                     interior=interior_mask)


def apply_rayleigh(modal: ModalData, alpha_R: float, beta_R: float) -> ModalData:
    if alpha_R < 0 or beta_R < 0:
        raise ValueError("damping coefficients must be non-negative")
    sigma = 0.5 * (alpha_R + beta_R * modal.omega ** 2)
    return replace(modal, sigma=sigma)


def rescale_modal(modal: ModalData, old: MaterialParams, new: MaterialParams,
                  thickness_old: float = DEFAULT_THICKNESS,
                  thickness_new: float | None = None) -> ModalData:
    """Exact material change without a new eigensolve.

    Stiffness is linear in D and Mass in ρh, so ω scales by
    √(D_new/D_old · ρ_old h_old / ρ_new h_new) and mass-normalized
    shapes by √(ρ_old h_old / ρ_new h_new).  Damping is recomputed from
    the new material's Rayleigh coefficients.
    """
    h_new = thickness_old if thickness_new is None else thickness_new
    mass_ratio = (old.rho * thickness_old) / (new.rho * h_new)
    d_ratio = flexural_rigidity(new, h_new) / flexural_rigidity(old, thickness_old)
    omega = modal.omega * np.sqrt(d_ratio * mass_ratio)
    shapes = modal.shapes * np.sqrt(mass_ratio)
    sigma = 0.5 * (new.alpha_R + new.beta_R * omega ** 2)
    return replace(modal, omega=omega, sigma=sigma, shapes=shapes)


def solve_modes(grid: ShapeGrid, mat: MaterialParams,
                thickness: float = DEFAULT_THICKNESS,
                physical_size: float = DEFAULT_EXTENT,
                n_modes: int = 32, method: str = "auto") -> ModalData:
    """triangulate + assemble + eigensolve + damping in one call."""
    mesh = triangulate(grid, physical_size)
    system = assemble(mesh, mat, thickness)
    modal = eigensolve(system, n_modes=n_modes, method=method)
    return apply_rayleigh(modal, mat.alpha_R, mat.beta_R)


def plate_analytic_omegas(mat: MaterialParams, thickness: float,
                          side: float, count: int) -> np.ndarray:
    """Closed-form simply-supported square plate line, ascending."""
    d = flexural_rigidity(mat, thickness)
    scale = np.sqrt(d / (mat.rho * thickness)) * np.pi ** 2 / side ** 2
    m, n = np.meshgrid(np.arange(1, 40), np.arange(1, 40))
    vals = np.sort((scale * (m ** 2 + n ** 2)).ravel())
    return vals[:count]
