"""Command line interface.

``landscape-probe <train|interp|project|surface|control> [flags]``

Exit codes are 0 on success, 2 for usage, configuration and file errors and
3 if training diverged.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from landscape_probe import __version__
from landscape_probe.config import DataConfig, ProbeConfig, SurfaceConfig, load_config
from landscape_probe.datasets.base_dataset import Splits
from landscape_probe.datasets.synthetic import gen_scalar_regression
from landscape_probe.dynamics import (
    SPECTRUM_KINDS,
    Spectrum,
    WalkConfig,
    factored_sgd_path,
    heatmap_grid,
    quadratic_descent_trace,
    random_walk_trace,
    taylor_check,
)
from landscape_probe.errors import DegenerateTrajectoryError, DivergedError, EvaluationError
from landscape_probe.exploration import svg_plots
from landscape_probe.input_output.from_to_csv import (
    write_curve,
    write_learning_curve,
    write_surface,
    write_surface_json,
    write_table,
    write_trace,
)
from landscape_probe.input_output.from_to_trajectory import load_trajectory, save_trajectory
from landscape_probe.model import ParamVector, build_deep_linear_chain
from landscape_probe.probing import (
    InterpolationCurve,
    interp_curve,
    parse_grid,
    projection_trace,
    random_point_curve,
    two_solution_curve,
)
from landscape_probe.surface import (
    SurfaceGrid,
    alpha_random_control,
    random_plane_control,
    surface_from_trajectory,
    variation_ratio,
)
from landscape_probe.training.sgd import TrajectoryRecord, init_params, sgd_train
from landscape_probe.utils.random_help import resolve_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3

INTERP_MODES = ("init-final", "two-solutions", "random-point")
SURFACE_KINDS = ("trajectory", "random-plane", "alpha-random")
CONTROL_KINDS = ("walk", "quadratic", "heatmap", "taylor")

Series = Dict[str, Tuple[np.ndarray, np.ndarray]]


class UsageError(Exception):
    """Arguments are individually valid but do not fit together."""


def _output_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_text(path: Path, text: str):
    with open(path, "w", newline="\n") as out_file:
        out_file.write(text)
    logger.info(f"Wrote {path}")


def _pick(flag, fallback):
    return fallback if flag is None else flag


def _splits_of(record: TrajectoryRecord, cache: Dict[Tuple, Splits]) -> Splits:
    key = tuple(sorted((k, v) for k, v in record.metadata.items() if k.startswith("data.")))
    if key not in cache:
        cache[key] = DataConfig.from_metadata(record.metadata).load()
    return cache[key]


def _versions() -> Dict[str, str]:
    import scipy

    return {
        "landscape_probe": __version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
    }


def cmd_train(args: argparse.Namespace) -> int:
    """Train from a configuration file and record the trajectory.

    Writes ``trajectory.lptraj``, ``learning_curve.csv`` and ``manifest.json``.
    """
    config = load_config(args.config)
    out = _output_dir(Path(args.output) if args.output else config.output_dir)
    splits = config.data.load()
    theta_i = init_params(config.spec, scale=config.init_scale, seed=config.init_seed)
    metadata = config.data.to_metadata()
    metadata["model.init_scale"] = repr(config.init_scale)
    metadata["model.init_seed"] = str(config.init_seed)
    record = sgd_train(
        config.spec, theta_i, splits, config.train, metadata=metadata, progress=args.progress
    )
    save_trajectory(record, out / "trajectory.lptraj")
    write_learning_curve(record, out / "learning_curve.csv")
    manifest = {
        "spec": config.spec.describe(),
        "spec_digest": record.spec_digest,
        "seed": config.train.seed,
        "init_seed": config.init_seed,
        "train": config.train.to_dict(),
        "data": config.data.to_metadata(),
        "epochs": int(record.epochs[-1]),
        "solution_epoch": int(record.solution_epoch),
        "versions": _versions(),
    }
    _write_text(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    logger.info(
        f"Trained {len(record)} snapshots, solution at epoch {record.solution_epoch}"
        f" with objective {record.solution_train_objective:.6g}"
    )
    return EXIT_OK


def _curve_series(label: str, curve: InterpolationCurve) -> Series:
    series = {f"{label} train": (curve.alphas, curve.j_train)}
    if curve.j_valid is not None:
        series[f"{label} valid"] = (curve.alphas, curve.j_valid)
    return series


def cmd_interp(args: argparse.Namespace) -> int:
    """Objective along straight lines in parameter space.

    Writes ``curve.csv`` (``curve_<k>.csv`` for several trajectories) and
    ``curve.svg`` with every curve overlaid.
    """
    probe = load_config(args.config).probe if args.config else ProbeConfig()
    mode = _pick(args.mode, probe.mode)
    if mode not in INTERP_MODES:
        raise UsageError(f"mode has to be one of {INTERP_MODES}, got {mode!r}")
    if mode == "two-solutions" and len(args.trajectories) != 2:
        raise UsageError(
            f"mode two-solutions needs exactly two trajectories, got {len(args.trajectories)}"
        )
    alphas = parse_grid(_pick(args.grid, probe.grid))
    out = _output_dir(Path(args.output))
    records = [load_trajectory(path) for path in args.trajectories]
    cache: Dict[Tuple, Splits] = {}
    common = dict(n_jobs=args.threads, progress=args.progress)

    curves: List[Tuple[str, InterpolationCurve]] = []
    if mode == "two-solutions":
        rec_a, rec_b = records
        splits = _splits_of(rec_a, cache)
        curves.append(
            ("solutions", two_solution_curve(rec_a.spec, splits, rec_a, rec_b, alphas, **common))
        )
    else:
        for idx, (path, record) in enumerate(zip(args.trajectories, records)):
            splits = _splits_of(record, cache)
            if mode == "random-point":
                curve = random_point_curve(
                    record.spec,
                    splits,
                    record,
                    _pick(args.norm_scale, probe.norm_scale),
                    _pick(args.seed, probe.seed),
                    alphas,
                    **common,
                )
            else:
                curve = interp_curve(
                    record.spec,
                    splits,
                    record.theta_i,
                    record.theta_f,
                    alphas,
                    start="theta_i",
                    end="theta_f",
                    **common,
                )
            label = Path(path).stem if len(records) == 1 else f"{idx}:{Path(path).stem}"
            curves.append((label, curve))

    series: Series = {}
    for idx, (label, curve) in enumerate(curves):
        write_curve(curve, out / ("curve.csv" if len(curves) == 1 else f"curve_{idx}.csv"))
        series.update(_curve_series(label, curve))
    svg = svg_plots.line_plot(
        series, title=f"Interpolation ({mode})", x_label="alpha", y_label="J", log_y=args.log_y
    )
    _write_text(out / "curve.svg", svg)
    return EXIT_OK


def cmd_project(args: argparse.Namespace) -> int:
    """Coordinates of every snapshot relative to the initialization-solution line."""
    out = _output_dir(Path(args.output))
    trace = projection_trace(load_trajectory(args.trajectory), keep_directions=False)
    write_trace(trace, out / "trace.csv")
    note = f"max residual ratio {trace.max_residual_ratio:.4g} (Euclidean norm)"
    svg = svg_plots.scatter_plot(
        trace.alpha,
        trace.beta,
        title="Trajectory projection",
        x_label="alpha",
        y_label="beta",
        note=note,
    )
    _write_text(out / "trace.svg", svg)
    logger.info(note)
    return EXIT_OK


def _trajectory_betas(record: TrajectoryRecord, count: int) -> np.ndarray:
    top = 1.2 * projection_trace(record, keep_directions=False).max_beta
    if top == 0:
        raise DegenerateTrajectoryError("All snapshots lie on one line, beta is always 0")
    return np.linspace(0.0, top, count)


def _report_variation(
    record: TrajectoryRecord, splits: Splits, plane: SurfaceGrid, out: Path, common: Dict
):
    resolution = len(plane.x)
    try:
        betas = _trajectory_betas(record, resolution)
    except DegenerateTrajectoryError as err:
        warnings.warn(f"No trajectory surface to compare the plane with: {err}")
        return
    reference = surface_from_trajectory(
        record.spec,
        splits,
        record,
        alphas=np.linspace(0.0, 1.0, resolution),
        betas=betas,
        **common,
    )
    ratio = variation_ratio(plane, reference)
    report = {
        "plane": plane.coefficient_of_variation,
        "trajectory": reference.coefficient_of_variation,
        "ratio": ratio,
    }
    _write_text(out / "variation.json", json.dumps(report, sort_keys=True, indent=1) + "\n")
    logger.info(f"Variation of the plane is {ratio:.4g} times the trajectory surface variation")


def cmd_surface(args: argparse.Namespace) -> int:
    """Objective on a two dimensional slice of parameter space.

    Writes ``surface.csv``, ``surface.json`` and the heatmap ``surface.svg``.
    ``random-plane`` also writes ``variation.json``, its coefficient of
    variation against the one of the trajectory surface of the same run.
    """
    settings = load_config(args.config).surface if args.config else SurfaceConfig()
    kind = _pick(args.kind, settings.kind)
    alpha_points = _pick(args.alpha_points, settings.alpha_points)
    resolution = _odd_resolution(_pick(args.resolution, settings.resolution))
    extent = _pick(args.extent, settings.extent)
    seed = _pick(args.seed, settings.seed)
    out = _output_dir(Path(args.output))
    record = load_trajectory(args.trajectory)
    splits = _splits_of(record, {})
    common = dict(n_jobs=args.threads, progress=args.progress)

    grid: SurfaceGrid
    if kind == "trajectory":
        beta_points = _pick(args.beta_points, settings.beta_points)
        grid = surface_from_trajectory(
            record.spec,
            splits,
            record,
            alphas=np.linspace(0.0, 1.0, alpha_points),
            betas=_trajectory_betas(record, beta_points),
            **common,
        )
    elif kind == "random-plane":
        grid = random_plane_control(
            record.spec,
            splits,
            record,
            _pick(extent, 0.1 * record.theta_f.norm()),
            resolution=resolution,
            seed=seed,
            **common,
        )
    elif kind == "alpha-random":
        grid = alpha_random_control(
            record.spec,
            splits,
            record,
            resolution=alpha_points,
            seed=seed,
            extent=extent,
            beta_resolution=resolution,
            **common,
        )
    else:
        raise UsageError(f"kind has to be one of {SURFACE_KINDS}, got {kind!r}")
    write_surface(grid, out / "surface.csv")
    write_surface_json(grid, out / "surface.json")
    _write_text(out / "surface.svg", svg_plots.heatmap(grid, title=f"Surface ({kind})"))
    if kind == "random-plane":
        _report_variation(record, splits, grid, out, common)
    return EXIT_OK


def _control_walk(args: argparse.Namespace, out: Path):
    plots = []
    for d in args.dims:
        config = WalkConfig(
            d=d, steps=_pick(args.steps, 1000), solution_step=args.solution_step, seed=args.seed
        )
        trace = random_walk_trace(config)
        write_trace(trace, out / f"walk_d{d}.csv")
        plots.append(
            svg_plots.scatter_plot(
                trace.alpha,
                trace.beta,
                title=f"Random walk, d = {d}",
                note=f"max residual ratio {trace.max_residual_ratio:.4g}",
            )
        )
    _write_text(out / "walk.svg", svg_plots.panel(plots, columns=2))


def _control_quadratic(args: argparse.Namespace, out: Path):
    spectrum = Spectrum(args.spectrum, low=args.low, high=args.high)
    rows = []
    series: Series = {}
    for learning_rate in args.learning_rates:
        for momentum in args.momenta:
            run = len(rows)
            trace = quadratic_descent_trace(
                d=args.dim,
                spectrum=spectrum,
                learning_rate=learning_rate,
                momentum=momentum,
                steps=_pick(args.steps, 1000),
                seed=args.seed,
            )
            write_trace(trace, out / f"quadratic_{run}.csv")
            rows.append(
                {
                    "run": run,
                    "learning_rate": learning_rate,
                    "momentum": momentum,
                    "max_beta": trace.max_beta,
                    "max_residual_ratio": trace.max_residual_ratio,
                    "diverged": trace.any_diverged,
                    "final_J": float(trace.objective[-1]),
                }
            )
            series[f"lr={learning_rate:g} mu={momentum:g}"] = (trace.alpha, trace.beta)
    write_table(pd.DataFrame(rows), out / "quadratic_summary.csv")
    svg = svg_plots.line_plot(series, title="Quadratic descent", x_label="alpha", y_label="beta")
    _write_text(out / "quadratic.svg", svg)


def _control_heatmap(args: argparse.Namespace, out: Path):
    path = factored_sgd_path(
        args.start, learning_rate=args.learning_rate, steps=_pick(args.steps, 200)
    )
    resolution = _odd_resolution(args.resolution)
    grid = heatmap_grid(extent=args.extent, resolution=resolution, trajectory=path)
    write_surface(grid, out / "heatmap.csv")
    write_surface_json(grid, out / "heatmap.json")
    _write_text(out / "heatmap.svg", svg_plots.heatmap(grid, title="J = (1 - w1 w2)^2"))


def _control_taylor(args: argparse.Namespace, out: Path):
    spec = build_deep_linear_chain([1, 1, 1])
    params = ParamVector(args.point, spec.manifest())
    frame = taylor_check(spec, params, gen_scalar_regression(), args.t, n_steps=args.n_steps)
    write_table(frame, out / "taylor.csv")
    t = frame["t"].to_numpy()
    svg = svg_plots.line_plot(
        {
            "second order": (t, frame["discrepancy"].to_numpy()),
            "first order": (t, frame["first_order_discrepancy"].to_numpy()),
        },
        title="Expansion in time against gradient flow",
        x_label="t",
        y_label="discrepancy",
        log_y=True,
    )
    _write_text(out / "taylor.svg", svg)


CONTROLS: Dict[str, Callable[[argparse.Namespace, Path], None]] = {
    "walk": _control_walk,
    "quadratic": _control_quadratic,
    "heatmap": _control_heatmap,
    "taylor": _control_taylor,
}


def cmd_control(args: argparse.Namespace) -> int:
    """Simulations that need no trained network.

    ``walk`` writes ``walk_d<d>.csv`` per dimension and a panel ``walk.svg``,
    ``quadratic`` one trace per setting plus ``quadratic_summary.csv``,
    ``heatmap`` the factored model surface and ``taylor`` the discrepancy table.
    """
    CONTROLS[args.kind](args, _output_dir(Path(args.output)))
    return EXIT_OK


def _odd_resolution(resolution: int) -> int:
    if resolution % 2 == 0:
        warnings.warn(f"Symmetric grids need an odd resolution, using {resolution + 1}")
        return resolution + 1
    return resolution


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"has to be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="landscape-probe", description="Probe the objective landscape of small networks."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug output"
    )
    parser.add_argument(
        "--threads", type=int, default=None, help="worker threads, default LP_THREADS or all cores"
    )
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    commands = parser.add_subparsers(dest="command", required=True)

    train = commands.add_parser("train", help="train a network and record its trajectory")
    train.add_argument("config", help="experiment configuration file")
    train.add_argument("--output", default=None, help="overrides output.directory")
    train.set_defaults(handler=cmd_train)

    interp = commands.add_parser("interp", help="objective along a straight line")
    interp.add_argument("trajectories", nargs="+")
    interp.add_argument("--config", default=None, help="take defaults from the probe section")
    interp.add_argument("--mode", choices=INTERP_MODES, default=None)
    interp.add_argument("--grid", default=None, help="grid name or start:stop:count")
    interp.add_argument("--norm-scale", type=float, default=None)
    interp.add_argument("--seed", type=int, default=None)
    interp.add_argument("--log-y", action="store_true")
    interp.add_argument("--output", default="interp")
    interp.set_defaults(handler=cmd_interp)

    project = commands.add_parser("project", help="project a trajectory onto its linear path")
    project.add_argument("trajectory")
    project.add_argument("--output", default="project")
    project.set_defaults(handler=cmd_project)

    surface = commands.add_parser("surface", help="objective on a two dimensional slice")
    surface.add_argument("trajectory")
    surface.add_argument("--config", default=None, help="take defaults from the surface section")
    surface.add_argument("--kind", choices=SURFACE_KINDS, default=None)
    surface.add_argument("--alpha-points", type=_positive_int, default=None)
    surface.add_argument("--beta-points", type=_positive_int, default=None)
    surface.add_argument(
        "--resolution",
        type=_positive_int,
        default=None,
        help="odd lattice size of the random axes, at least 3; even values are rounded up",
    )
    surface.add_argument("--extent", type=float, default=None)
    surface.add_argument("--seed", type=int, default=None)
    surface.add_argument("--output", default="surface")
    surface.set_defaults(handler=cmd_surface)

    control = commands.add_parser("control", help="random walks, quadratics and the scalar model")
    control.add_argument("kind", choices=CONTROL_KINDS)
    control.add_argument("--output", default="control")
    control.add_argument("--seed", type=int, default=0)
    control.add_argument("--steps", type=_positive_int, default=None)
    control.add_argument("--dims", type=_positive_int, nargs="+", default=[1, 10, 100, 1000])
    control.add_argument("--solution-step", type=_positive_int, default=900)
    control.add_argument("--dim", type=_positive_int, default=10000)
    control.add_argument("--spectrum", choices=SPECTRUM_KINDS, default="log-uniform")
    control.add_argument("--low", type=float, default=1e-2)
    control.add_argument("--high", type=float, default=1.0)
    control.add_argument("--learning-rates", type=float, nargs="+", default=[0.1])
    control.add_argument("--momenta", type=float, nargs="+", default=[0.0])
    control.add_argument("--learning-rate", type=float, default=0.05)
    control.add_argument("--start", type=float, nargs=2, default=[0.1, 0.1])
    control.add_argument("--extent", type=float, default=2.0)
    control.add_argument(
        "--resolution",
        type=_positive_int,
        default=101,
        help="odd heatmap lattice size, at least 3; even values are rounded up",
    )
    control.add_argument("--point", type=float, nargs=2, default=[0.5, 0.5])
    control.add_argument("--t", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    control.add_argument("--n-steps", type=_positive_int, default=1000)
    control.set_defaults(handler=cmd_control)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line interface.

    Parameters
    ----------
    argv : Optional[Sequence[str]]
        arguments without the program name, defaults to ``sys.argv[1:]``

    Returns
    -------
    int
        exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    logging.basicConfig(
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.threads = resolve_threads(args.threads)
        return args.handler(args)
    except UsageError as err:
        parser.print_usage(sys.stderr)
        print(f"landscape-probe: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    # configuration, file format and digest errors are all ValueErrors
    except (ValueError, OSError) as err:
        print(f"landscape-probe: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DivergedError as err:
        print(f"landscape-probe: training diverged in epoch {err.epoch}: {err}", file=sys.stderr)
        return EXIT_DIVERGED
    except EvaluationError as err:
        print(f"landscape-probe: objective not finite: {err}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
