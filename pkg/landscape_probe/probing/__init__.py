"""Linear interpolation probes and trajectory projection."""
from landscape_probe.probing.interpolation import (
    InterpolationCurve,
    check_grid,
    interp_curve,
    interp_point,
    parse_grid,
    random_point_curve,
    standard_grids,
    two_solution_curve,
)
from landscape_probe.probing.projection import (
    ProjectionTrace,
    TraceBuilder,
    normalized_beta,
    project_point,
    projection_trace,
    reconstruct,
)

__all__ = [
    "InterpolationCurve",
    "ProjectionTrace",
    "TraceBuilder",
    "check_grid",
    "interp_curve",
    "interp_point",
    "normalized_beta",
    "parse_grid",
    "project_point",
    "projection_trace",
    "random_point_curve",
    "reconstruct",
    "standard_grids",
    "two_solution_curve",
]
