"""Triangle mesh over an occupancy grid.

Each occupied cell becomes two right triangles on the (N+1)x(N+1) lattice
of cell corners.  Vertex coordinates are normalized to [0, 1] so the full
grid spans a unit square.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .shape import GRID_SIZE, ShapeGrid


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray   # (n_v, 2) float64, meters
    triangles: np.ndarray  # (n_t, 3) int32, CCW
    boundary: np.ndarray   # (n_v,) bool, True on the outline
    extent: float          # side length of the full grid window, meters

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_interior(self) -> int:
        return int((~self.boundary).sum())

    def normalized_vertices(self) -> np.ndarray:
        """Vertex coordinates rescaled to the [0,1]^2 window."""
        return self.vertices / self.extent


def triangulate(shape: ShapeGrid, physical_size: float = 0.5) -> TriMesh:
    if physical_size <= 0:
        raise ValueError("physical_size must be positive")
    n = GRID_SIZE
    cells = shape.cells

    # corner (i, j) of the lattice -> compact vertex id, only for corners
    # touching at least one occupied cell
    used = np.zeros((n + 1, n + 1), dtype=bool)
    ys, xs = np.nonzero(cells)
    for y, x in zip(ys, xs):
        used[y:y + 2, x:x + 2] = True
    index = -np.ones((n + 1, n + 1), dtype=np.int64)
    index[used] = np.arange(used.sum())

    iy, ix = np.nonzero(used)
    vertices = np.stack([ix, iy], axis=1).astype(np.float64) * (physical_size / n)

    # Split diagonal flips per quadrant so the mesh (and with it the
    # assembled operators) stays invariant under both mirrors and x<->y
    # swap; a uniform diagonal would split degenerate square-plate mode
    # pairs and break mirrored-response equality.
    tris = np.empty((2 * len(ys), 3), dtype=np.int32)
    half = n // 2
    for t, (y, x) in enumerate(zip(ys, xs)):
        v00 = index[y, x]
        v10 = index[y, x + 1]
        v01 = index[y + 1, x]
        v11 = index[y + 1, x + 1]
        if (x < half) == (y < half):
            tris[2 * t] = (v00, v10, v11)
            tris[2 * t + 1] = (v00, v11, v01)
        else:
            tris[2 * t] = (v00, v10, v01)
            tris[2 * t + 1] = (v10, v11, v01)

    # a corner is on the boundary when any of its four incident cells is
    # unoccupied or off the grid
    padded = np.zeros((n + 2, n + 2), dtype=bool)
    padded[1:-1, 1:-1] = cells
    all_four = (padded[:-1, :-1] & padded[:-1, 1:]
                & padded[1:, :-1] & padded[1:, 1:])
    boundary = used & ~all_four

    return TriMesh(vertices=vertices, triangles=tris, boundary=boundary[iy, ix],
                   extent=physical_size)
