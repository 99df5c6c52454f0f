"""Gradient flow and its second-order expansion in time.

Along the flow ``d theta / dt = -g`` with ``g`` the gradient of the summed
objective and ``H`` its Hessian,

    theta(t) = theta(0) - t g + 1/2 t^2 H g + O(t^3)

and ``H g`` is half the gradient of ``|g|^2``.
"""
from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd

from landscape_probe.model import Batch, NetworkSpec, ParamVector, grad, hvp

logger = logging.getLogger(__name__)


def gradient_flow(
    spec: NetworkSpec, params: ParamVector, dataset: Batch, t: float, n_steps: int = 1000
) -> ParamVector:
    """Integrate ``d theta / dt = -grad J`` from 0 to ``t`` with fixed step RK4.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    params : ParamVector
        start
    dataset : Batch
        data of the summed objective
    t : float
        non-negative end time
    n_steps : int
        number of steps of size ``t / n_steps``

    Returns
    -------
    ParamVector
        ``theta(t)``
    """
    if t < 0:
        raise ValueError(f"t has to be non-negative, but got {t}")
    if t == 0:
        return params
    h = t / n_steps

    def velocity(values: np.ndarray) -> np.ndarray:
        return -grad(spec, params.with_values(values), dataset).values

    state = params.values
    for _ in range(n_steps):
        k1 = velocity(state)
        k2 = velocity(state + 0.5 * h * k1)
        k3 = velocity(state + 0.5 * h * k2)
        k4 = velocity(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return params.with_values(state)


def second_order_prediction(
    spec: NetworkSpec, params: ParamVector, dataset: Batch, t: float
) -> ParamVector:
    """``theta - t g + 1/2 t^2 H g``."""
    g = grad(spec, params, dataset)
    hg = hvp(spec, params, g, dataset)
    return params - t * g + (0.5 * t * t) * hg


def taylor_check(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Batch,
    t_values: Sequence[float],
    n_steps: int = 1000,
) -> pd.DataFrame:
    """Compare the expansion in time with the integrated gradient flow.

    For every ``t`` the flow is integrated with step ``t / n_steps`` and also
    evaluated at ``t / 2``; the ratio of both discrepancies approaches 8 for
    a third-order remainder.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    params : ParamVector
        start point
    dataset : Batch
        data of the summed objective
    t_values : Sequence[float]
        non-negative times
    n_steps : int
        integration steps per time

    Returns
    -------
    pd.DataFrame
        columns ``t``, ``discrepancy`` (second order), ``first_order_discrepancy``,
        ``half_t_discrepancy`` and ``shrink_factor``
    """
    g = grad(spec, params, dataset)

    def discrepancies(t: float):
        flow = gradient_flow(spec, params, dataset, t, n_steps)
        first = params - t * g
        second = second_order_prediction(spec, params, dataset, t)
        return (flow - second).norm(), (flow - first).norm()

    rows = []
    for t in t_values:
        t = float(t)
        second, first = discrepancies(t)
        half = discrepancies(t / 2.0)[0]
        shrink = second / half if half > 0 else float("nan")
        rows.append((t, second, first, half, shrink))
        logger.debug(f"t={t:g}: discrepancy {second:.3e}, shrink factor {shrink:.3g}")
    return pd.DataFrame(
        rows,
        columns=[
            "t",
            "discrepancy",
            "first_order_discrepancy",
            "half_t_discrepancy",
            "shrink_factor",
        ],
    )


class GradientIdentity(NamedTuple):
    finite_difference: ParamVector
    two_hvp: ParamVector
    relative_error: float


def squared_gradient_identity(
    spec: NetworkSpec, params: ParamVector, dataset: Batch, h: float = 1e-6
) -> GradientIdentity:
    """Check that the gradient of ``|g|^2`` is ``2 H g``.

    The left side uses central finite differences with step ``h`` per
    coordinate, so it is meant for small networks.

    Returns
    -------
    GradientIdentity
        both sides and ``|lhs - rhs| / |rhs|``
    """

    def squared_norm(values: np.ndarray) -> float:
        g_here = grad(spec, params.with_values(values), dataset).values
        return float(np.dot(g_here, g_here))

    base = params.values
    fd = np.empty(len(params))
    for idx in range(len(params)):
        step = np.zeros(len(params))
        step[idx] = h
        fd[idx] = (squared_norm(base + step) - squared_norm(base - step)) / (2.0 * h)
    g = grad(spec, params, dataset)
    two_hvp = 2.0 * hvp(spec, params, g, dataset)
    scale = two_hvp.norm()
    error = float(np.linalg.norm(fd - two_hvp.values))
    if scale > 0:
        error /= scale
    return GradientIdentity(params.with_values(fd), two_hvp, error)


class GradientCurvature(NamedTuple):
    """``curvature = g^T H g``; the second-order term lengthens the step iff it is negative."""

    curvature: float
    lengthens_step: bool


def curvature_along_gradient(
    spec: NetworkSpec, params: ParamVector, dataset: Batch
) -> GradientCurvature:
    """Curvature of the objective along its gradient.

    With the step ``-t g + 1/2 t^2 H g`` the squared length changes by
    ``-t^3 g^T H g`` to leading order, so negative curvature along the
    gradient makes the flow move faster than the first-order prediction.
    """
    g = grad(spec, params, dataset)
    curvature = g.dot(hvp(spec, params, g, dataset))
    return GradientCurvature(curvature, curvature < 0)
