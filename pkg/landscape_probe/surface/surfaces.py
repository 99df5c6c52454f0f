"""Objective over two dimensional slices of parameter space."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from landscape_probe.datasets.base_dataset import Dataset, Splits
from landscape_probe.errors import DegenerateTrajectoryError
from landscape_probe.model import NetworkSpec, ParamVector, loss_total
from landscape_probe.probing.interpolation import check_grid, interp_point
from landscape_probe.probing.projection import ProjectionTrace, projection_trace, unit_direction
from landscape_probe.training.sgd import TrajectoryRecord
from landscape_probe.utils.random_help import ordered_map, random_generator

logger = logging.getLogger(__name__)

FIXED_RANDOM = "fixed random"


@dataclass(frozen=True, eq=False)
class SurfaceGrid:
    """Objective values on a lattice.

    Attributes
    ----------
    x: np.ndarray
        first coordinate, one value per column
    y: np.ndarray
        second coordinate, one value per row of a column
    values: np.ndarray
        matrix of shape ``(len(x), len(y))``
    provenance: Tuple[str, ...]
        which direction spans the second axis of every column
    overlay: np.ndarray
        trajectory points as rows ``(x, y, J)``, possibly empty
    kind: str
        how the surface was produced
    x_label: str
        name of the first coordinate
    y_label: str
        name of the second coordinate
    column_sources: Optional[np.ndarray]
        snapshot index whose residual direction spans each column, -1 for fixed directions
    curves: Dict[str, np.ndarray]
        named polylines to draw on top, rows ``(x, y)``
    """

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    provenance: Tuple[str, ...]
    overlay: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    kind: str = "trajectory"
    x_label: str = "alpha"
    y_label: str = "beta"
    column_sources: Optional[np.ndarray] = None
    curves: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.x), len(self.y)):
            raise ValueError(
                f"values have shape {values.shape}, grids need {(len(self.x), len(self.y))}"
            )
        if len(self.provenance) != len(self.x):
            raise ValueError("Every column needs a provenance entry")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        overlay = np.asarray(self.overlay, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "overlay", overlay)

    @property
    def coefficient_of_variation(self) -> float:
        """Standard deviation over mean of all cell values."""
        mean = float(np.mean(self.values))
        return float(np.std(self.values)) / abs(mean) if mean != 0 else float("inf")

    def to_long_frame(self) -> pd.DataFrame:
        """One row per cell: ``x_label, y_label, J, provenance`` in column-major order."""
        n_x, n_y = self.values.shape
        return pd.DataFrame(
            {
                self.x_label: np.repeat(self.x, n_y),
                self.y_label: np.tile(self.y, n_x),
                "J": self.values.reshape(-1),
                "provenance": np.repeat(np.array(self.provenance, dtype=object), n_y),
            }
        )

    def to_dict(self) -> Dict[str, Any]:
        """Grids, matrix and overlay as plain lists."""
        return {
            "kind": self.kind,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "values": self.values.tolist(),
            "provenance": list(self.provenance),
            "overlay": self.overlay.tolist(),
            "curves": {name: _nan_to_none(curve) for name, curve in sorted(self.curves.items())},
            "coefficient_of_variation": self.coefficient_of_variation,
        }

    def __repr__(self):
        return (
            f"SurfaceGrid(kind={self.kind}, {self.x_label}: {len(self.x)},"
            f" {self.y_label}: {len(self.y)}, # overlay points: {len(self.overlay)})"
        )


def variation_ratio(grid: SurfaceGrid, reference: SurfaceGrid) -> float:
    """Coefficient of variation of ``grid`` relative to the one of ``reference``.

    Below 1 the grid is flatter than the reference, e.g. a random plane around
    a solution compared with the trajectory surface of the same run.

    Raises
    ------
    ValueError
        if the reference surface is constant
    """
    reference_cov = reference.coefficient_of_variation
    if reference_cov == 0:
        raise ValueError("Reference surface is constant, its coefficient of variation is 0")
    return grid.coefficient_of_variation / reference_cov


def symmetric_grid(extent: float, resolution: int) -> np.ndarray:
    """Odd number of points on ``[-extent, extent]``, exactly symmetric with 0 at the center.

    Raises
    ------
    ValueError
        if ``extent <= 0`` or ``resolution`` is not an odd number of at least 3
    """
    if not extent > 0:
        raise ValueError(f"extent has to be positive, but got {extent}")
    if resolution < 3 or resolution % 2 == 0:
        raise ValueError(f"resolution has to be odd and at least 3, but got {resolution}")
    half = np.linspace(0.0, extent, (resolution + 1) // 2)
    return np.concatenate([-half[:0:-1], half])


def _train_split(data: Union[Splits, Dataset]) -> Dataset:
    return data.train if isinstance(data, Splits) else data


def _columns(
    spec: NetworkSpec,
    dataset: Dataset,
    bases: Sequence[ParamVector],
    directions: Sequence[np.ndarray],
    offsets: np.ndarray,
    n_jobs: int,
    progress: bool,
) -> np.ndarray:
    """Evaluate ``base + offset * direction`` for every column and offset."""

    def column(idx: int) -> np.ndarray:
        base = bases[idx]
        direction = directions[idx]
        return np.array(
            [
                loss_total(spec, base.with_values(base.values + off * direction), dataset).mean
                for off in offsets.tolist()
            ]
        )

    return np.array(
        ordered_map(column, range(len(bases)), n_jobs=n_jobs, progress=progress, desc="Surface")
    ).reshape(len(bases), len(offsets))


def _nearest(candidates: np.ndarray, positions: np.ndarray, target: float) -> int:
    distance = np.abs(positions[candidates] - target)
    # ties go to the later snapshot
    return int(candidates[np.flatnonzero(distance == distance.min())[-1]])


def select_columns(
    trace: ProjectionTrace, alphas: np.ndarray
) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Snapshot whose residual direction spans each column.

    The snapshot with the nearest normalized alpha is used; if its residual
    vanishes the nearest snapshot with a non-zero residual is used instead.

    Raises
    ------
    DegenerateTrajectoryError
        if every snapshot lies on the start-to-solution line
    """
    every = np.arange(len(trace))
    usable = np.flatnonzero(trace.beta > 0)
    if usable.shape[0] == 0:
        raise DegenerateTrajectoryError(
            "All snapshots lie on the line from theta_i to theta_f, no residual direction"
        )
    sources = []
    provenance = []
    n_fallback = 0
    for alpha in alphas.tolist():
        nearest = _nearest(every, trace.alpha_hat, alpha)
        if trace.beta[nearest] > 0:
            sources.append(nearest)
            provenance.append(f"snapshot {nearest} (t={trace.t[nearest]:g})")
        else:
            fallback = _nearest(usable, trace.alpha_hat, alpha)
            n_fallback += 1
            sources.append(fallback)
            provenance.append(
                f"snapshot {fallback} (t={trace.t[fallback]:g}, fallback from {nearest})"
            )
    if n_fallback:
        warnings.warn(
            f"{n_fallback} column(s) use the residual direction of a neighboring snapshot"
        )
    return np.array(sources, dtype=np.int64), tuple(provenance)


def surface_from_trajectory(
    spec: NetworkSpec,
    data: Union[Splits, Dataset],
    record: TrajectoryRecord,
    alphas: Sequence[float] = None,
    betas: Sequence[float] = None,
    n_jobs: int = 1,
    progress: bool = False,
) -> SurfaceGrid:
    """Objective over the (alpha, beta) coordinates of a trajectory.

    Column ``j`` evaluates ``interp_point(theta_i, theta_f, alphas[j]) + beta * v(t)``
    for every ``beta``, where ``v(t)`` is the unit residual direction of the
    snapshot nearest to ``alphas[j]`` (see :func:`select_columns`). The row
    ``beta = 0`` therefore is the interpolation curve on the same grid.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    data : Union[Splits, Dataset]
        data, the training split is evaluated
    record : TrajectoryRecord
        run with at least 2 snapshots
    alphas : Sequence[float]
        normalized alpha grid, default 64 points on [0, 1]
    betas : Sequence[float]
        beta grid, default 64 points on ``[0, 1.2 * max beta(t)]``
    n_jobs : int
        joblib thread count, columns are evaluated in parallel
    progress : bool
        show a progress bar

    Returns
    -------
    SurfaceGrid
        values, per column provenance and the trajectory as overlay

    Raises
    ------
    ValueError
        if the record has fewer than 2 snapshots or a grid is invalid
    DegenerateTrajectoryError
        if ``theta_f = theta_i`` or all snapshots lie on one line
    """
    if len(record) < 2:
        raise ValueError("A surface needs a trajectory with at least 2 snapshots")
    dataset = _train_split(data)
    trace = projection_trace(record, keep_directions=True)
    alphas = check_grid(np.linspace(0.0, 1.0, 64) if alphas is None else alphas)
    if betas is None:
        if trace.max_beta == 0:
            raise DegenerateTrajectoryError("All snapshots lie on one line, beta is always 0")
        betas = np.linspace(0.0, 1.2 * trace.max_beta, 64)
    betas = check_grid(betas)
    sources, provenance = select_columns(trace, alphas)
    bases = [interp_point(record.theta_i, record.theta_f, a) for a in alphas.tolist()]
    directions = [trace.directions[s] for s in sources]
    values = _columns(spec, dataset, bases, directions, betas, n_jobs, progress)
    overlay = [
        (trace.alpha_hat[k], trace.beta[k], loss_total(spec, snap, dataset).mean)
        for k, snap in enumerate(record.snapshots)
    ]
    logger.debug(f"Trajectory surface with {len(alphas)}x{len(betas)} cells")
    return SurfaceGrid(
        x=alphas,
        y=betas,
        values=values,
        provenance=provenance,
        overlay=np.array(overlay),
        kind="trajectory",
        x_label="alpha",
        y_label="beta",
        column_sources=sources,
    )


def random_directions(n: int, count: int, seed: Union[int, np.random.Generator]) -> np.ndarray:
    """Orthonormal directions by Gram-Schmidt on Gaussian samples, one per row."""
    samples = random_generator(seed).standard_normal((count, n))
    directions = []
    for sample in samples:
        vec = sample
        # two passes keep the directions orthogonal to rounding precision
        for _ in range(2):
            for prev in directions:
                vec = vec - np.dot(vec, prev) * prev
        directions.append(vec / np.linalg.norm(vec))
    return np.array(directions)


def random_plane_control(
    spec: NetworkSpec,
    data: Union[Splits, Dataset],
    theta_f: Union[ParamVector, TrajectoryRecord],
    extent: float,
    resolution: int = 21,
    seed: Union[int, np.random.Generator] = 0,
    record: TrajectoryRecord = None,
    n_jobs: int = 1,
    progress: bool = False,
) -> SurfaceGrid:
    """Objective over a random plane through the solution.

    Evaluates ``theta_f + s * d1 + r * d2`` for ``s, r`` on a symmetric grid,
    ``d1, d2`` are random orthonormal directions.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    data : Union[Splits, Dataset]
        data, the training split is evaluated
    theta_f : Union[ParamVector, TrajectoryRecord]
        center of the plane, the solution of a record is used for a record
    extent : float
        half width of the lattice
    resolution : int
        odd number of lattice points per axis
    seed : Union[int, np.random.Generator]
        seed of the directions
    record : TrajectoryRecord
        trajectory projected onto the plane as overlay
    n_jobs : int
        joblib thread count
    progress : bool
        show a progress bar

    Returns
    -------
    SurfaceGrid
        the center cell holds the objective at ``theta_f``

    Raises
    ------
    ValueError
        if ``extent <= 0`` or ``resolution`` is not odd
    """
    if isinstance(theta_f, TrajectoryRecord):
        record = theta_f if record is None else record
        theta_f = theta_f.theta_f
    dataset = _train_split(data)
    grid = symmetric_grid(extent, resolution)
    d1, d2 = random_directions(len(theta_f), 2, seed)
    bases = [theta_f.with_values(theta_f.values + s * d1) for s in grid.tolist()]
    values = _columns(spec, dataset, bases, [d2] * len(bases), grid, n_jobs, progress)
    overlay = np.zeros((0, 3))
    if record is not None:
        overlay = np.array(
            [
                (
                    float(np.dot(snap.values - theta_f.values, d1)),
                    float(np.dot(snap.values - theta_f.values, d2)),
                    loss_total(spec, snap, dataset).mean,
                )
                for snap in record.snapshots
            ]
        )
    return SurfaceGrid(
        x=grid,
        y=grid,
        values=values,
        provenance=(FIXED_RANDOM,) * len(grid),
        overlay=overlay,
        kind="random-plane",
        x_label="s",
        y_label="r",
        column_sources=np.full(len(grid), -1, dtype=np.int64),
    )


def alpha_random_control(
    spec: NetworkSpec,
    data: Union[Splits, Dataset],
    record: TrajectoryRecord,
    resolution: int = 64,
    seed: Union[int, np.random.Generator] = 0,
    extent: float = None,
    beta_resolution: int = 65,
    n_jobs: int = 1,
    progress: bool = False,
) -> SurfaceGrid:
    """Objective over the plane spanned by ``u`` and a fixed random direction.

    The second direction ``w`` is Gaussian, orthogonalized against ``u`` and
    normalized. Column ``j`` evaluates
    ``interp_point(theta_i, theta_f, alpha_j) + beta * w``; the trajectory is
    overlaid through its inner products with ``u`` and ``w``.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    data : Union[Splits, Dataset]
        data, the training split is evaluated
    record : TrajectoryRecord
        recorded run
    resolution : int
        number of normalized alpha values on [0, 1]
    seed : Union[int, np.random.Generator]
        seed of ``w``
    extent : float
        half width of the symmetric beta grid, default ``1.2 * max beta(t)``
        or ``|theta_f - theta_i| / 2`` for a straight trajectory
    beta_resolution : int
        odd number of beta values
    n_jobs : int
        joblib thread count
    progress : bool
        show a progress bar

    Returns
    -------
    SurfaceGrid
        surface of a true two dimensional linear subspace

    Raises
    ------
    DegenerateTrajectoryError
        if ``theta_f = theta_i``
    """
    dataset = _train_split(data)
    u = unit_direction(record.theta_i, record.theta_f)
    distance = float(np.linalg.norm(record.theta_f.values - record.theta_i.values))
    sample = random_generator(seed).standard_normal(len(u))
    for _ in range(2):
        sample = sample - np.dot(sample, u) * u
    w = sample / np.linalg.norm(sample)
    if extent is None:
        trace = projection_trace(record, keep_directions=False)
        extent = 1.2 * trace.max_beta if trace.max_beta > 0 else 0.5 * distance
    alphas = np.linspace(0.0, 1.0, resolution)
    betas = symmetric_grid(extent, beta_resolution)
    bases = [interp_point(record.theta_i, record.theta_f, a) for a in alphas.tolist()]
    values = _columns(spec, dataset, bases, [w] * len(bases), betas, n_jobs, progress)
    overlay = np.array(
        [
            (
                float(np.dot(snap.values - record.theta_i.values, u)) / distance,
                float(np.dot(snap.values - record.theta_i.values, w)),
                loss_total(spec, snap, dataset).mean,
            )
            for snap in record.snapshots
        ]
    )
    return SurfaceGrid(
        x=alphas,
        y=betas,
        values=values,
        provenance=(FIXED_RANDOM,) * len(alphas),
        overlay=overlay,
        kind="alpha-random",
        x_label="alpha",
        y_label="beta",
        column_sources=np.full(len(alphas), -1, dtype=np.int64),
    )


def _nan_to_none(arr: np.ndarray) -> list:
    return [[None if np.isnan(v) else float(v) for v in row] for row in np.asarray(arr)]
