"""Affine material normalization onto the training ranges.

In-range values land in [0,1]; out-of-range values pass through the same
affine map linearly, which is what lets sliders wander past the ends.
"""

from __future__ import annotations

import numpy as np

from ..modal.fem import TRAINING_RANGES, MaterialParams

MATERIAL_ORDER = ("rho", "E", "nu", "alpha_R", "beta_R")

_LO = np.array([TRAINING_RANGES[k][0] for k in MATERIAL_ORDER])
_HI = np.array([TRAINING_RANGES[k][1] for k in MATERIAL_ORDER])


def normalize_material(mat: MaterialParams) -> np.ndarray:
    raw = np.array([mat.rho, mat.E, mat.nu, mat.alpha_R, mat.beta_R])
    return (raw - _LO) / (_HI - _LO)


def normalize_material_array(arr: np.ndarray) -> np.ndarray:
    """Vectorized normalization for (..., 5) material rows."""
    a = np.asarray(arr, dtype=np.float64)
    if a.shape[-1] != 5:
        raise ValueError("material rows must have 5 components")
    return (a - _LO) / (_HI - _LO)


def denormalize_material(vec) -> MaterialParams:
    v = np.asarray(vec, dtype=np.float64)
    if v.shape != (5,):
        raise ValueError("normalized material must have 5 components")
    raw = _LO + v * (_HI - _LO)
    return MaterialParams(*raw)
