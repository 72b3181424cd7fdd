"""Binary occupancy grids describing the 2D outline of a resonating object.

Grids are 64x64 with cells[row, col]; row 0 is the BOTTOM of the window,
matching the bottom-left origin used for interaction coordinates.  PGM
files follow the usual image convention (top row first) and are flipped
on the way in/out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..pgmio import read_pgm, write_pgm

GRID_SIZE = 64
MIN_AREA = 16


def _components(cells: np.ndarray) -> int:
    """Number of 4-connected components of True cells."""
    seen = np.zeros_like(cells, dtype=bool)
    count = 0
    h, w = cells.shape
    for sy, sx in zip(*np.nonzero(cells & ~seen)):
        if seen[sy, sx]:
            continue
        count += 1
        stack = [(sy, sx)]
        seen[sy, sx] = True
        while stack:
            y, x = stack.pop()
            for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                if 0 <= ny < h and 0 <= nx < w and cells[ny, nx] and not seen[ny, nx]:
                    seen[ny, nx] = True
                    stack.append((ny, nx))
    return count


def _has_hole(cells: np.ndarray) -> bool:
    """True if some empty cell is not 4-connected to the grid border."""
    h, w = cells.shape
    empty = ~cells
    reach = np.zeros_like(cells, dtype=bool)
    stack = []
    for x in range(w):
        for y in (0, h - 1):
            if empty[y, x] and not reach[y, x]:
                reach[y, x] = True
                stack.append((y, x))
    for y in range(h):
        for x in (0, w - 1):
            if empty[y, x] and not reach[y, x]:
                reach[y, x] = True
                stack.append((y, x))
    while stack:
        y, x = stack.pop()
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if 0 <= ny < h and 0 <= nx < w and empty[ny, nx] and not reach[ny, nx]:
                reach[ny, nx] = True
                stack.append((ny, nx))
    return bool(np.any(empty & ~reach))


@dataclass(frozen=True)
class ShapeGrid:
    """64x64 occupancy grid; exactly one 4-connected blob of >= 16 cells."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        if cells.shape != (GRID_SIZE, GRID_SIZE):
            raise ValueError(f"grid must be {GRID_SIZE}x{GRID_SIZE}, got {cells.shape}")
        area = int(cells.sum())
        if area < MIN_AREA:
            raise ValueError(f"occupied area {area} below minimum {MIN_AREA}")
        if _components(cells) != 1:
            raise ValueError("grid must have exactly one 4-connected component")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def full(cls) -> "ShapeGrid":
        return cls(np.ones((GRID_SIZE, GRID_SIZE), dtype=bool))

    @property
    def area(self) -> int:
        return int(self.cells.sum())

    def contains(self, x: float, y: float) -> bool:
        """Occupancy at normalized window coordinates (bottom-left origin)."""
        ix = min(max(int(np.floor(x * GRID_SIZE)), 0), GRID_SIZE - 1)
        iy = min(max(int(np.floor(y * GRID_SIZE)), 0), GRID_SIZE - 1)
        return bool(self.cells[iy, ix])

    def packed(self) -> bytes:
        """512-byte bitset: row-major from the bottom row, LSB-first."""
        return np.packbits(self.cells.reshape(-1).astype(np.uint8),
                           bitorder="little").tobytes()

    @classmethod
    def from_packed(cls, blob: bytes) -> "ShapeGrid":
        if len(blob) != GRID_SIZE * GRID_SIZE // 8:
            raise ValueError(f"shape bitset must be {GRID_SIZE * GRID_SIZE // 8} bytes")
        bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), bitorder="little")
        return cls(bits.reshape(GRID_SIZE, GRID_SIZE).astype(bool))

    def save_pgm(self, path):
        img = np.where(self.cells[::-1], 255, 0).astype(np.uint8)
        write_pgm(path, img, maxval=255, binary=True)

    @classmethod
    def load_pgm(cls, path) -> "ShapeGrid":
        arr, _ = read_pgm(path)
        if arr.shape != (GRID_SIZE, GRID_SIZE):
            raise ValueError(f"shape PGM must be {GRID_SIZE}x{GRID_SIZE}, got {arr.shape}")
        return cls((arr[::-1] != 0))


def random_shape(seed: int, base_radius: float | None = None,
                 perturbation: float | None = None) -> ShapeGrid:
    """Deterministic random blob: a disc whose radius is modulated by a
    smooth periodic perturbation, rasterized onto the grid.

    Resamples internally (bounded) until the result is a single
    4-connected, hole-free component of sufficient area.
    """
    rng = np.random.default_rng(seed)
    for _ in range(64):
        r0 = rng.uniform(0.22, 0.38) if base_radius is None else base_radius
        amp = rng.uniform(0.05, 0.30) if perturbation is None else perturbation
        n_harm = 6
        coef_c = rng.normal(0.0, 1.0, n_harm) / (1.0 + np.arange(n_harm)) ** 1.2
        coef_s = rng.normal(0.0, 1.0, n_harm) / (1.0 + np.arange(n_harm)) ** 1.2
        cx = 0.5 + rng.uniform(-0.05, 0.05)
        cy = 0.5 + rng.uniform(-0.05, 0.05)

        xs = (np.arange(GRID_SIZE) + 0.5) / GRID_SIZE
        dx = xs[None, :] - cx
        dy = xs[:, None] - cy
        theta = np.arctan2(dy, dx)
        wave = np.zeros_like(theta)
        for k in range(n_harm):
            wave += coef_c[k] * np.cos((k + 1) * theta) + coef_s[k] * np.sin((k + 1) * theta)
        peak = np.abs(wave).max()
        if peak > 0:
            wave /= peak
        radius = np.clip(r0 * (1.0 + amp * wave), 0.02, 0.49)
        cells = dx * dx + dy * dy < radius * radius

        if cells.sum() >= MIN_AREA and _components(cells) == 1 and not _has_hole(cells):
            return ShapeGrid(cells)
    raise RuntimeError(f"could not draw a valid shape for seed {seed}")
