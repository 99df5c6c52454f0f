"""Coordinates of a trajectory relative to the line from start to solution.

For a trajectory ``theta(t)`` from ``theta_i`` to the solution ``theta_f`` let
``u = (theta_f - theta_i) / |theta_f - theta_i|``. Then

* ``alpha(t) = (theta(t) - theta_i)^T u`` is the progress along the line
* ``beta(t) = |theta(t) - theta_i - alpha(t) u|`` is the norm of the residual
* ``v(t)`` is the residual divided by ``beta(t)`` (zero if ``beta(t) = 0``)
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
import pandas as pd

from landscape_probe.errors import DegenerateTrajectoryError
from landscape_probe.model import ParamVector
from landscape_probe.training.sgd import TrajectoryRecord

logger = logging.getLogger(__name__)


class ProjectedPoint(NamedTuple):
    alpha: float
    beta: float
    residual: np.ndarray


def project_point(theta: np.ndarray, theta_i: np.ndarray, u: np.ndarray) -> ProjectedPoint:
    """Decompose ``theta - theta_i`` into a multiple of the unit vector ``u`` and a residual."""
    offset = np.asarray(theta, dtype=np.float64) - theta_i
    alpha = float(np.dot(offset, u))
    residual = offset - alpha * u
    return ProjectedPoint(alpha, float(np.linalg.norm(residual)), residual)


@dataclass(frozen=True, eq=False)
class ProjectionTrace:
    """Per-snapshot projection coordinates.

    Attributes
    ----------
    t: np.ndarray
        epoch or step of every point
    alpha: np.ndarray
        progress along ``u`` in units of parameter norm
    alpha_hat: np.ndarray
        ``alpha / |theta_f - theta_i|``, 0 at the start and 1 at the solution
    beta: np.ndarray
        norm of the residual
    theta_norm: np.ndarray
        ``|theta(t)|``
    residual_ratio: np.ndarray
        ``beta / |theta(t)|`` (0 where ``theta(t) = 0``)
    distance: float
        ``|theta_f - theta_i|``
    solution_index: Optional[int]
        position of ``theta_f`` among the points, None if it is not one of them
    diverged: Optional[np.ndarray]
        per point flag of simulations that can diverge
    objective: Optional[np.ndarray]
        objective per point, if the producer knows it
    u: Optional[np.ndarray]
        unit direction from ``theta_i`` to ``theta_f``
    directions: Optional[np.ndarray]
        unit residual directions ``v(t)``, one row per point
    """

    t: np.ndarray
    alpha: np.ndarray
    alpha_hat: np.ndarray
    beta: np.ndarray
    theta_norm: np.ndarray
    residual_ratio: np.ndarray
    distance: float
    solution_index: Optional[int] = None
    diverged: Optional[np.ndarray] = None
    objective: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    directions: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.t)

    @property
    def max_residual_ratio(self) -> float:
        return float(np.max(self.residual_ratio))

    @property
    def max_beta(self) -> float:
        """Maximum norm of the residual."""
        return float(np.max(self.beta))

    @property
    def any_diverged(self) -> bool:
        return self.diverged is not None and bool(np.any(self.diverged))

    def to_frame(self) -> pd.DataFrame:
        """Columns ``t, alpha, alpha_hat, beta, theta_norm, residual_ratio[, J][, diverged]``."""
        columns = {
            "t": self.t,
            "alpha": self.alpha,
            "alpha_hat": self.alpha_hat,
            "beta": self.beta,
            "theta_norm": self.theta_norm,
            "residual_ratio": self.residual_ratio,
        }
        if self.objective is not None:
            columns["J"] = self.objective
        if self.diverged is not None:
            columns["diverged"] = self.diverged.astype(np.int64)
        return pd.DataFrame(columns)

    def __repr__(self):
        return (
            f"ProjectionTrace(# points: {len(self)}, max beta: {self.max_beta:.6g},"
            f" max residual ratio: {self.max_residual_ratio:.6g})"
        )


class TraceBuilder:
    """Accumulate projection coordinates point by point.

    Used for trajectories too large to keep in memory, e.g. long random walks.
    """

    def __init__(
        self, theta_i: np.ndarray, theta_f: np.ndarray, keep_directions: bool = False
    ):
        self.theta_i = np.asarray(theta_i, dtype=np.float64)
        delta = np.asarray(theta_f, dtype=np.float64) - self.theta_i
        self.distance = float(np.linalg.norm(delta))
        if self.distance == 0:
            raise DegenerateTrajectoryError(
                "Initial and solution parameters coincide, the projection is undefined"
            )
        self.u = delta / self.distance
        self.keep_directions = keep_directions
        self.solution_index: Optional[int] = None
        self._rows: List[tuple] = []
        self._diverged: List[bool] = []
        self._objective: List[float] = []
        self._directions: List[np.ndarray] = []

    def add(
        self,
        t: float,
        theta: np.ndarray,
        is_solution: bool = False,
        diverged: bool = None,
        objective: float = None,
    ):
        theta = np.asarray(theta, dtype=np.float64)
        if is_solution:
            # exact coordinates of the solution, free of rounding in the projection
            alpha, beta, direction = self.distance, 0.0, np.zeros_like(self.u)
            self.solution_index = len(self._rows)
        else:
            alpha, beta, residual = project_point(theta, self.theta_i, self.u)
            direction = residual / beta if beta > 0 else np.zeros_like(self.u)
        theta_norm = float(np.linalg.norm(theta))
        ratio = beta / theta_norm if theta_norm > 0 else 0.0
        self._rows.append((t, alpha, alpha / self.distance, beta, theta_norm, ratio))
        if diverged is not None:
            self._diverged.append(bool(diverged))
        if objective is not None:
            self._objective.append(float(objective))
        if self.keep_directions:
            self._directions.append(direction)

    def build(self) -> ProjectionTrace:
        rows = np.array(self._rows, dtype=np.float64).reshape(-1, 6)
        if np.any(rows[:, 5] > 1.0):
            warnings.warn(
                f"Residual ratio up to {rows[:, 5].max():.4g} exceeds 1, the trajectory"
                " moved far from a small initialization"
            )
        return ProjectionTrace(
            t=rows[:, 0],
            alpha=rows[:, 1],
            alpha_hat=rows[:, 2],
            beta=rows[:, 3],
            theta_norm=rows[:, 4],
            residual_ratio=rows[:, 5],
            distance=self.distance,
            solution_index=self.solution_index,
            diverged=np.array(self._diverged, dtype=bool) if self._diverged else None,
            objective=np.array(self._objective) if self._objective else None,
            u=self.u,
            directions=np.array(self._directions) if self.keep_directions else None,
        )


def projection_trace(record: TrajectoryRecord, keep_directions: bool = True) -> ProjectionTrace:
    """Project every snapshot of a trajectory onto the start-to-solution line.

    Snapshots after the solution are included. At the start and at the
    solution ``beta`` is exactly 0.

    Parameters
    ----------
    record : TrajectoryRecord
        recorded run
    keep_directions : bool
        store the unit residual direction of every snapshot

    Returns
    -------
    ProjectionTrace
        coordinates of every snapshot

    Raises
    ------
    DegenerateTrajectoryError
        if ``theta_f`` equals ``theta_i``

    Examples
    --------
    >>> import numpy as np
    >>> from landscape_probe.model import ParamVector, build_deep_linear_chain
    >>> from landscape_probe.training import TrajectoryRecord
    >>> from landscape_probe.probing import projection_trace
    >>> spec = build_deep_linear_chain([1, 1, 1])
    >>> points = [ParamVector(p, spec.manifest()) for p in ([0, 0], [1, 1], [2, 0])]
    >>> record = TrajectoryRecord(spec, points[0], [0, 1, 2], points, 2, np.zeros(3))
    >>> trace = projection_trace(record)
    >>> trace.alpha.tolist(), trace.beta.tolist()
    ([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    """
    builder = TraceBuilder(record.theta_i.values, record.theta_f.values, keep_directions)
    for idx, (epoch, snap) in enumerate(zip(record.epochs, record.snapshots)):
        builder.add(float(epoch), snap.values, is_solution=idx == record.solution_index)
    trace = builder.build()
    logger.debug(f"Projected {len(trace)} snapshots: {trace}")
    return trace


def normalized_beta(trace: ProjectionTrace) -> np.ndarray:
    """``beta / max(beta)``, all zeros if the trace never leaves the line."""
    peak = trace.max_beta
    if peak == 0:
        return np.zeros_like(trace.beta)
    return trace.beta / peak


def reconstruct(trace: ProjectionTrace, index: int) -> np.ndarray:
    """``alpha * u + beta * v`` of one point, i.e. ``theta(t) - theta_i``."""
    if trace.u is None or trace.directions is None:
        raise ValueError("The trace was built without directions")
    return trace.alpha[index] * trace.u + trace.beta[index] * trace.directions[index]


def unit_direction(theta_0: ParamVector, theta_1: ParamVector) -> np.ndarray:
    """Unit vector from ``theta_0`` to ``theta_1``."""
    delta = theta_1.values - theta_0.values
    norm = np.linalg.norm(delta)
    if norm == 0:
        raise DegenerateTrajectoryError("Points coincide, no direction is defined")
    return delta / norm
