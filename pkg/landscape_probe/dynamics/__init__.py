"""Analytic models and high dimensional control simulations."""
from landscape_probe.dynamics.factored import (
    QuarticCurve,
    closed_form_interp,
    factored_cost,
    factored_grad,
    factored_sgd_path,
    heatmap_grid,
)
from landscape_probe.dynamics.taylor import (
    GradientCurvature,
    GradientIdentity,
    curvature_along_gradient,
    gradient_flow,
    second_order_prediction,
    squared_gradient_identity,
    taylor_check,
)
from landscape_probe.dynamics.walks import (
    SPECTRUM_KINDS,
    Spectrum,
    WalkConfig,
    quadratic_descent_trace,
    random_walk_trace,
)

__all__ = [
    "GradientCurvature",
    "GradientIdentity",
    "QuarticCurve",
    "SPECTRUM_KINDS",
    "Spectrum",
    "WalkConfig",
    "closed_form_interp",
    "curvature_along_gradient",
    "factored_cost",
    "factored_grad",
    "factored_sgd_path",
    "gradient_flow",
    "heatmap_grid",
    "quadratic_descent_trace",
    "random_walk_trace",
    "second_order_prediction",
    "squared_gradient_identity",
    "taylor_check",
]
