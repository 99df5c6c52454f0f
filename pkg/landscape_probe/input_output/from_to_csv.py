"""CSV and JSON export of curves, traces, surfaces and tables.

Floats are written with 17 significant digits so every 64 bit value
survives a round trip.
"""
import json
import os
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from landscape_probe.probing.interpolation import InterpolationCurve
from landscape_probe.probing.projection import ProjectionTrace
from landscape_probe.surface.surfaces import SurfaceGrid
from landscape_probe.training.sgd import TrajectoryRecord

FLOAT_FORMAT = "%.17g"

PathLike = Union[str, os.PathLike]


def write_table(frame: pd.DataFrame, path: PathLike):
    """Write a data frame without index and with lossless floats."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_curve(curve: InterpolationCurve, path: PathLike):
    """Header ``alpha,J_train[,J_valid][,err_rate]``, one row per grid point."""
    write_table(curve.to_frame(), path)


def read_curve(path: PathLike) -> InterpolationCurve:
    frame = pd.read_csv(path, float_precision="round_trip")
    return InterpolationCurve(
        alphas=frame["alpha"].to_numpy(),
        j_train=frame["J_train"].to_numpy(),
        j_valid=frame["J_valid"].to_numpy() if "J_valid" in frame else None,
        err_rate=frame["err_rate"].to_numpy() if "err_rate" in frame else None,
    )


def write_trace(trace: ProjectionTrace, path: PathLike):
    write_table(trace.to_frame(), path)


def learning_curve_frame(record: TrajectoryRecord) -> pd.DataFrame:
    """Per-epoch objectives and error rates of a training run."""
    columns: Dict[str, Any] = {
        "epoch": np.arange(len(record.train_objective)),
        "J_train": record.train_objective,
    }
    for column, values in (
        ("J_valid", record.valid_objective),
        ("err_train", record.train_error),
        ("err_valid", record.valid_error),
    ):
        if values is not None:
            columns[column] = values
    return pd.DataFrame(columns)


def write_learning_curve(record: TrajectoryRecord, path: PathLike):
    write_table(learning_curve_frame(record), path)


def write_surface(grid: SurfaceGrid, path: PathLike):
    """Long form, one row per cell."""
    write_table(grid.to_long_frame(), path)


def write_surface_json(grid: SurfaceGrid, path: PathLike):
    """Grids, value matrix, provenance and overlay as JSON."""
    with open(path, "w") as out_file:
        json.dump(grid.to_dict(), out_file, sort_keys=True, indent=1, allow_nan=True)
        out_file.write("\n")
