"""Objective along straight lines in parameter space."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from landscape_probe.datasets.base_dataset import Dataset, Splits
from landscape_probe.errors import DigestMismatchError, EvaluationError, StructureError
from landscape_probe.evaluation.curve_metrics import misclassification_rate
from landscape_probe.model import SOFTMAX_CROSS_ENTROPY, NetworkSpec, ParamVector, loss_total
from landscape_probe.training.sgd import TrajectoryRecord
from landscape_probe.utils.random_help import ordered_map, random_generator

logger = logging.getLogger(__name__)


def interp_point(theta_0: ParamVector, theta_1: ParamVector, alpha: float) -> ParamVector:
    """Return ``(1 - alpha) * theta_0 + alpha * theta_1``.

    ``alpha`` outside of [0, 1] extrapolates. Coordinates that are equal in
    both points are returned unchanged, so interpolating a point with itself
    is constant.

    Raises
    ------
    StructureError
        if the manifests differ

    Examples
    --------
    >>> from landscape_probe.model import ParamVector, Segment
    >>> from landscape_probe.probing import interp_point
    >>> manifest = [Segment("w", 0, 1, 2)]
    >>> interp_point(ParamVector([0, 0], manifest), ParamVector([2, 4], manifest), 0.5).values
    array([1., 2.])
    """
    if theta_0.manifest != theta_1.manifest:
        raise StructureError("Cannot interpolate between different manifests")
    alpha = float(alpha)
    mixed = (1.0 - alpha) * theta_0.values + alpha * theta_1.values
    # coordinates shared by both ends stay exact for every alpha
    return theta_0.with_values(np.where(theta_0.values == theta_1.values, theta_0.values, mixed))


@dataclass(frozen=True, eq=False)
class InterpolationCurve:
    """Objective values on an alpha grid.

    Attributes
    ----------
    alphas: np.ndarray
        strictly increasing grid
    j_train: np.ndarray
        mean training objective per grid point
    j_valid: Optional[np.ndarray]
        mean validation objective, if a validation split was given
    err_rate: Optional[np.ndarray]
        training misclassification rate, for classifiers
    start: str
        description of the point at alpha 0
    end: str
        description of the point at alpha 1
    """

    alphas: np.ndarray
    j_train: np.ndarray
    j_valid: Optional[np.ndarray] = None
    err_rate: Optional[np.ndarray] = None
    start: str = "theta_0"
    end: str = "theta_1"

    def __post_init__(self):
        n = len(self.alphas)
        for name in ("j_train", "j_valid", "err_rate"):
            value = getattr(self, name)
            if value is not None and len(value) != n:
                raise ValueError(f"{name} has {len(value)} values for {n} grid points")

    def __len__(self):
        return len(self.alphas)

    def to_frame(self) -> pd.DataFrame:
        """Columns ``alpha, J_train[, J_valid][, err_rate]``."""
        columns = {"alpha": self.alphas, "J_train": self.j_train}
        if self.j_valid is not None:
            columns["J_valid"] = self.j_valid
        if self.err_rate is not None:
            columns["err_rate"] = self.err_rate
        return pd.DataFrame(columns)

    def __repr__(self):
        return (
            f"InterpolationCurve({self.start} -> {self.end}, # points: {len(self)})"
        )


def check_grid(alphas: Sequence[float]) -> np.ndarray:
    """Return the grid as float array.

    Raises
    ------
    ValueError
        unless the grid is non-empty, finite and strictly increasing
    """
    grid = np.array(alphas, dtype=np.float64).reshape(-1)
    if grid.shape[0] == 0:
        raise ValueError("The alpha grid is empty")
    if not np.all(np.isfinite(grid)):
        raise ValueError("The alpha grid contains non-finite values")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("The alpha grid has to be strictly increasing")
    return grid


def _as_splits(data: Union[Splits, Dataset]) -> Splits:
    return Splits(data) if isinstance(data, Dataset) else data


def interp_curve(
    spec: NetworkSpec,
    splits: Union[Splits, Dataset],
    theta_0: ParamVector,
    theta_1: ParamVector,
    alphas: Sequence[float],
    n_jobs: int = 1,
    progress: bool = False,
    start: str = "theta_0",
    end: str = "theta_1",
) -> InterpolationCurve:
    """Evaluate the objective along the line from ``theta_0`` to ``theta_1``.

    Every grid point is an independent evaluation of :func:`loss_total`, points
    may be evaluated on several threads and are assembled in grid order.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    splits : Union[Splits, Dataset]
        data, the validation objective is added if a validation split exists
    theta_0 : ParamVector
        point at alpha 0
    theta_1 : ParamVector
        point at alpha 1
    alphas : Sequence[float]
        strictly increasing grid
    n_jobs : int
        joblib thread count
    progress : bool
        show a progress bar
    start : str
        description of ``theta_0``
    end : str
        description of ``theta_1``

    Returns
    -------
    InterpolationCurve
        objective values, error rates for classifiers

    Raises
    ------
    ValueError
        if the grid is empty or not increasing
    EvaluationError
        if the objective is not finite, ``alpha`` names the grid point
    """
    grid = check_grid(alphas)
    splits = _as_splits(splits)
    classify = spec.loss == SOFTMAX_CROSS_ENTROPY

    def evaluate(alpha: float):
        theta = interp_point(theta_0, theta_1, alpha)
        try:
            j_train = loss_total(spec, theta, splits.train).mean
            j_valid = (
                None if splits.valid is None else loss_total(spec, theta, splits.valid).mean
            )
        except EvaluationError as err:
            raise EvaluationError(
                f"Objective at alpha={alpha!r}: {err}", n_nonfinite=err.n_nonfinite, alpha=alpha
            )
        err_rate = misclassification_rate(spec, theta, splits.train) if classify else None
        return j_train, j_valid, err_rate

    results = ordered_map(
        evaluate, grid.tolist(), n_jobs=n_jobs, progress=progress, desc="Interpolating"
    )
    logger.debug(f"Evaluated {len(grid)} points from {start} to {end}")
    return InterpolationCurve(
        alphas=grid,
        j_train=np.array([r[0] for r in results]),
        j_valid=None if splits.valid is None else np.array([r[1] for r in results]),
        err_rate=np.array([r[2] for r in results]) if classify else None,
        start=start,
        end=end,
    )


def standard_grids() -> Dict[str, np.ndarray]:
    """The named alpha grids.

    Returns
    -------
    Dict[str, np.ndarray]
        ``coarse-50`` and ``fine-200`` tile [0, 1], ``zoom-start-200`` tiles
        [0, 0.01] and ``zoom-end-200`` tiles [0.99, 1]
    """
    return {
        "coarse-50": np.linspace(0.0, 1.0, 50),
        "fine-200": np.linspace(0.0, 1.0, 200),
        "zoom-start-200": np.linspace(0.0, 0.01, 200),
        "zoom-end-200": np.linspace(0.99, 1.0, 200),
    }


_CUSTOM_GRID = re.compile(r"^\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*:\s*(\d+)\s*$")


def parse_grid(text: str) -> np.ndarray:
    """Resolve a grid name of :func:`standard_grids` or ``start:stop:count``.

    Raises
    ------
    ValueError
        if the text is neither
    """
    grids = standard_grids()
    if text in grids:
        return grids[text]
    match = _CUSTOM_GRID.match(text)
    if match is None:
        raise ValueError(
            f"Unknown grid {text!r}, use one of {sorted(grids)} or start:stop:count"
        )
    start, stop, count = float(match.group(1)), float(match.group(2)), int(match.group(3))
    return check_grid(np.linspace(start, stop, count))


def _check_record(spec: NetworkSpec, record: TrajectoryRecord, name: str):
    if record.spec_digest != spec.digest():
        raise DigestMismatchError(
            f"{name} was trained with {record.spec.describe()}, expected {spec.describe()}"
        )


def two_solution_curve(
    spec: NetworkSpec,
    splits: Union[Splits, Dataset],
    record_a: TrajectoryRecord,
    record_b: TrajectoryRecord,
    alphas: Sequence[float],
    n_jobs: int = 1,
    progress: bool = False,
) -> InterpolationCurve:
    """Interpolate between the solutions of two runs.

    Raises
    ------
    DigestMismatchError
        if the runs do not share the architecture ``spec``
    """
    _check_record(spec, record_a, "first trajectory")
    _check_record(spec, record_b, "second trajectory")
    return interp_curve(
        spec,
        splits,
        record_a.theta_f,
        record_b.theta_f,
        alphas,
        n_jobs=n_jobs,
        progress=progress,
        start="theta_f(A)",
        end="theta_f(B)",
    )


def random_point_curve(
    spec: NetworkSpec,
    splits: Union[Splits, Dataset],
    record: Union[TrajectoryRecord, ParamVector],
    norm_scale: float,
    seed: Union[int, np.random.Generator],
    alphas: Sequence[float],
    n_jobs: int = 1,
    progress: bool = False,
) -> InterpolationCurve:
    """Interpolate from a random point to a solution.

    The random point is an isotropic Gaussian direction rescaled to norm
    ``norm_scale * |theta_f|``.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    splits : Union[Splits, Dataset]
        data
    record : Union[TrajectoryRecord, ParamVector]
        run whose solution is the end point, or the end point itself
    norm_scale : float
        norm of the random point relative to the solution, 0 gives the origin
    seed : Union[int, np.random.Generator]
        seed of the random direction
    alphas : Sequence[float]
        grid
    n_jobs : int
        joblib thread count
    progress : bool
        show a progress bar

    Returns
    -------
    InterpolationCurve
        curve from the random point to ``theta_f``

    Raises
    ------
    ValueError
        if ``norm_scale`` is negative
    """
    if not norm_scale >= 0:
        raise ValueError(f"norm_scale has to be non-negative, but got {norm_scale}")
    if isinstance(record, TrajectoryRecord):
        _check_record(spec, record, "trajectory")
        theta_f = record.theta_f
    else:
        theta_f = record
    direction = random_generator(seed).standard_normal(len(theta_f))
    radius = norm_scale * theta_f.norm()
    theta_0 = theta_f.with_values(direction * (radius / np.linalg.norm(direction)))
    return interp_curve(
        spec,
        splits,
        theta_0,
        theta_f,
        alphas,
        n_jobs=n_jobs,
        progress=progress,
        start=f"random(norm_scale={norm_scale})",
        end="theta_f",
    )
