from .shape import GRID_SIZE, MIN_AREA, ShapeGrid, random_shape
from .mesh import TriMesh, triangulate
from .fem import (TRAINING_RANGES, DEFAULT_THICKNESS, DEFAULT_EXTENT,
                  MaterialParams, PlateSystem, ModalData, flexural_rigidity,
                  assemble, eigensolve, apply_rayleigh, rescale_modal,
                  solve_modes, plate_analytic_omegas)
from .response import (mode_resonators, target_response, render_reference,
                       render_modulated_reference)

__all__ = [
    "GRID_SIZE", "MIN_AREA", "ShapeGrid", "random_shape",
    "TriMesh", "triangulate",
    "TRAINING_RANGES", "DEFAULT_THICKNESS", "DEFAULT_EXTENT",
    "MaterialParams", "PlateSystem", "ModalData", "flexural_rigidity",
    "assemble", "eigensolve", "apply_rayleigh", "rescale_modal",
    "solve_modes", "plate_analytic_omegas",
    "mode_resonators", "target_response", "render_reference",
    "render_modulated_reference",
]
