"""Two dimensional slices of the objective."""
from landscape_probe.surface.surfaces import (
    FIXED_RANDOM,
    SurfaceGrid,
    alpha_random_control,
    random_directions,
    random_plane_control,
    select_columns,
    surface_from_trajectory,
    symmetric_grid,
    variation_ratio,
)

__all__ = [
    "FIXED_RANDOM",
    "SurfaceGrid",
    "alpha_random_control",
    "random_directions",
    "random_plane_control",
    "select_columns",
    "surface_from_trajectory",
    "symmetric_grid",
    "variation_ratio",
]
