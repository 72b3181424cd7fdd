"""Training dataset container and its binary file format.

Layout (little-endian), magic "NRWB", version 1:

    magic           4 bytes
    version         u32
    n_examples      u32
    n_bins          u32
    sample_rate     f64
    fmin            f64
    fmax_ratio      f64
    then per example:
      shape bitset  512 bytes (64x64 bits, row-major, bottom row first,
                    LSB-first within each byte)
      material      5 x f64  (rho, E, nu, alpha_R, beta_R)
      position      2 x f64  (x, y in [0,1])
      target        n_bins x f32 (dB magnitude on the shared log grid)

The frequency-grid parameters ride in the header so training never has
to guess which grid the targets were sampled on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .modal.shape import GRID_SIZE, ShapeGrid
from .resonator import log_freq_grid

MAGIC = b"NRWB"
DATASET_VERSION = 1
_HEADER = struct.Struct("<4sIII ddd".replace(" ", ""))
_SHAPE_BYTES = GRID_SIZE * GRID_SIZE // 8


@dataclass
class Dataset:
    grids: np.ndarray       # (N, 64, 64) bool
    materials: np.ndarray   # (N, 5) f64
    positions: np.ndarray   # (N, 2) f64
    targets: np.ndarray     # (N, K) f32, dB
    sample_rate: float
    fmin: float = 20.0
    fmax_ratio: float = 0.45

    def __post_init__(self):
        n = len(self.grids)
        if not (len(self.materials) == len(self.positions)
                == len(self.targets) == n):
            raise ValueError("dataset field lengths disagree")
        if n == 0:
            raise ValueError("dataset is empty")
        self.grids = np.ascontiguousarray(self.grids, dtype=bool)
        self.materials = np.ascontiguousarray(self.materials, dtype=np.float64)
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.targets = np.ascontiguousarray(self.targets, dtype=np.float32)

    def __len__(self) -> int:
        return len(self.grids)

    @property
    def n_bins(self) -> int:
        return self.targets.shape[1]

    def freqs(self) -> np.ndarray:
        return log_freq_grid(self.n_bins, self.fmin, self.sample_rate,
                             self.fmax_ratio)


def write_dataset(path, ds: Dataset) -> None:
    n, k = len(ds), ds.n_bins
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, DATASET_VERSION, n, k,
                              ds.sample_rate, ds.fmin, ds.fmax_ratio))
        for i in range(n):
            fh.write(ShapeGrid(ds.grids[i]).packed())
            fh.write(ds.materials[i].astype("<f8").tobytes())
            fh.write(ds.positions[i].astype("<f8").tobytes())
            fh.write(ds.targets[i].astype("<f4").tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError("dataset file truncated in header")
        magic, version, n, k, sr, fmin, fmax_ratio = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"not a dataset file (magic {magic!r})")
        if version != DATASET_VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        rec = _SHAPE_BYTES + 5 * 8 + 2 * 8 + k * 4
        blob = fh.read()
    if len(blob) != n * rec:
        raise ValueError(f"dataset payload is {len(blob)} bytes, "
                         f"expected {n * rec}")
    grids = np.empty((n, GRID_SIZE, GRID_SIZE), dtype=bool)
    materials = np.empty((n, 5))
    positions = np.empty((n, 2))
    targets = np.empty((n, k), dtype=np.float32)
    for i in range(n):
        off = i * rec
        grids[i] = ShapeGrid.from_packed(blob[off:off + _SHAPE_BYTES]).cells
        off += _SHAPE_BYTES
        materials[i] = np.frombuffer(blob, "<f8", 5, off)
        off += 40
        positions[i] = np.frombuffer(blob, "<f8", 2, off)
        off += 16
        targets[i] = np.frombuffer(blob, "<f4", k, off)
    return Dataset(grids, materials, positions, targets,
                   sample_rate=sr, fmin=fmin, fmax_ratio=fmax_ratio)
