"""The scalar factored linear model ``y = w1 w2 x`` trained on ``x = 1, y = 1``.

Its cost is ``(1 - w1 w2)^2``, with a saddle at the origin and the hyperbola
``w2 = 1 / w1`` as manifold of global minima.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as P

from landscape_probe.surface.surfaces import SurfaceGrid, symmetric_grid

ArrayLike = Union[float, np.ndarray]


def factored_cost(w1: ArrayLike, w2: ArrayLike) -> ArrayLike:
    """``(1 - w1 w2)^2``, elementwise for arrays."""
    residual = 1.0 - w1 * w2
    return residual * residual


def factored_grad(w1: ArrayLike, w2: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """Gradient ``(-2 (1 - w1 w2) w2, -2 (1 - w1 w2) w1)``."""
    residual = 1.0 - w1 * w2
    return -2.0 * residual * w2, -2.0 * residual * w1


class QuarticCurve(NamedTuple):
    """Cost along a line as polynomial ``c0 + c1 a + ... + c4 a^4``."""

    coefficients: Tuple[float, float, float, float, float]

    def __call__(self, alphas: ArrayLike) -> ArrayLike:
        return P.polyval(alphas, self.coefficients)


def closed_form_interp(theta_0: Sequence[float], theta_1: Sequence[float]) -> QuarticCurve:
    """Expand ``(1 - w1(a) w2(a))^2`` for ``w(a) = (1 - a) theta_0 + a theta_1``.

    Parameters
    ----------
    theta_0 : Sequence[float]
        ``(w1, w2)`` at ``a = 0``
    theta_1 : Sequence[float]
        ``(w1, w2)`` at ``a = 1``

    Returns
    -------
    QuarticCurve
        exact coefficients

    Examples
    --------
    >>> from landscape_probe.dynamics import closed_form_interp
    >>> closed_form_interp((0, 0), (1, 1)).coefficients
    (1.0, 0.0, -2.0, 0.0, 1.0)
    """
    (a0, b0), (a1, b1) = theta_0, theta_1
    w1 = np.array([a0, a1 - a0], dtype=np.float64)
    w2 = np.array([b0, b1 - b0], dtype=np.float64)
    residual = P.polysub([1.0], P.polymul(w1, w2))
    coefficients = np.zeros(5)
    squared = P.polymul(residual, residual)
    coefficients[: len(squared)] = squared
    return QuarticCurve(tuple(float(c) for c in coefficients))


def factored_sgd_path(
    start: Sequence[float], learning_rate: float = 0.05, steps: int = 200
) -> np.ndarray:
    """Gradient descent on the factored cost, rows ``(w1, w2)`` including the start."""
    if not learning_rate > 0:
        raise ValueError(f"learning_rate has to be positive, but got {learning_rate}")
    path = np.empty((steps + 1, 2))
    path[0] = start
    for step in range(steps):
        g1, g2 = factored_grad(*path[step])
        path[step + 1] = path[step] - learning_rate * np.array([g1, g2])
    return path


def _manifold(extent: float, n: int = 400) -> np.ndarray:
    """Both branches of ``w2 = 1 / w1`` inside the square, separated by a NaN row."""
    if extent < 1:
        return np.zeros((0, 2))
    w1 = np.linspace(1.0 / extent, extent, n)
    positive = np.column_stack([w1, 1.0 / w1])
    return np.vstack([positive, [[np.nan, np.nan]], -positive])


def heatmap_grid(
    extent: float = 2.0, resolution: int = 101, trajectory: np.ndarray = None
) -> SurfaceGrid:
    """Factored cost on a centered square lattice.

    Parameters
    ----------
    extent : float
        half width of the square
    resolution : int
        odd number of points per axis
    trajectory : np.ndarray
        optional path with rows ``(w1, w2)``, e.g. from :func:`factored_sgd_path`

    Returns
    -------
    SurfaceGrid
        ``values[i, j] = factored_cost(x[i], y[j])`` with the solution manifold
        as curve ``"w2=1/w1"``

    Raises
    ------
    ValueError
        if ``extent <= 0`` or ``resolution`` is not odd
    """
    grid = symmetric_grid(extent, resolution)
    values = factored_cost(grid[:, None], grid[None, :])
    overlay = np.zeros((0, 3))
    if trajectory is not None:
        trajectory = np.asarray(trajectory, dtype=np.float64).reshape(-1, 2)
        overlay = np.column_stack(
            [trajectory, factored_cost(trajectory[:, 0], trajectory[:, 1])]
        )
    return SurfaceGrid(
        x=grid,
        y=grid,
        values=values,
        provenance=("w2 axis",) * len(grid),
        overlay=overlay,
        kind="heatmap",
        x_label="w1",
        y_label="w2",
        curves={"w2=1/w1": _manifold(extent)},
    )
