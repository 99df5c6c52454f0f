import logging
import os
from pathlib import Path

import numpy as np
import pytest
from landscape_probe.config import load_config
from landscape_probe.datasets import gen_scalar_regression, gen_two_gaussians, split
from landscape_probe.evaluation import bump_report, misclassification_rate
from landscape_probe.model import NetworkSpec, ParamVector, build_deep_linear_chain
from landscape_probe.probing import (
    interp_curve,
    parse_grid,
    projection_trace,
    two_solution_curve,
)
from landscape_probe.training import TrainConfig, TrajectoryRecord, init_params, sgd_train

logger = logging.getLogger(__name__)


def test_monotone():
    report = bump_report(np.linspace(2.0, 0.0, 20) ** 2)
    assert report.n_violations == 0
    assert report.violation_mass == 0.0
    assert report.max_violation == 0.0
    assert report.barrier_positions == []
    assert report.n_local_minima == 0


def test_single_barrier():
    report = bump_report([0.0, 1.0, 0.0])
    assert report.barrier_positions == [1]
    assert report.barrier_heights == [1.0]
    assert report.n_violations == 1
    assert report.violation_mass == 1.0


def test_interior_minimum():
    report = bump_report([3.0, 1.0, 2.0, 0.5, 0.0])
    assert report.n_local_minima == 1
    assert report.minima_positions == [1]
    assert report.n_violations == 1
    assert report.max_violation == 1.0
    assert report.barrier_positions == []


def test_tolerance():
    ripple = [1.0, 0.5, 0.5 + 1e-9, 0.5, 0.0]
    report = bump_report(ripple)
    assert report.n_violations == 0
    assert report.n_local_minima == 0
    assert report.tolerance == 1e-6
    exact = bump_report(ripple, tolerance=0.0)
    assert exact.n_violations == 1
    assert exact.minima_positions == [1]


def test_constant_and_single():
    assert bump_report([1.0, 1.0, 1.0]).n_violations == 0
    assert bump_report([4.0]).barrier_positions == []


def test_empty():
    with pytest.raises(ValueError):
        bump_report([])


def test_two_solution_barrier():
    spec = build_deep_linear_chain([1, 1, 1])
    records = []
    for solution in ([2.0, 0.5], [0.5, 2.0]):
        points = [ParamVector(p, spec.manifest()) for p in ([0.1, 0.1], solution)]
        records.append(TrajectoryRecord(spec, points[0], [0, 1], points, 1, np.zeros(2)))
    curve = two_solution_curve(spec, gen_scalar_regression(), *records, parse_grid("fine-200"))
    report = bump_report(curve)
    assert len(report.barrier_heights) == 1
    assert abs(report.barrier_heights[0] - 0.3164) < 1e-3


def test_misclassification_rate():
    spec = NetworkSpec.parse("affine(2,2)", "softmax-cross-entropy")
    data = gen_two_gaussians(10, 2, 6.0, seed=0)
    # class 1 sits at positive coordinates
    params = ParamVector([-1.0, 1.0, -1.0, 1.0, 0.0, 0.0], spec.manifest())
    assert misclassification_rate(spec, params, data) == 0.0
    assert misclassification_rate(spec, params.with_values(-params.values), data) == 1.0
    with pytest.raises(ValueError):
        misclassification_rate(build_deep_linear_chain([1, 1]), params, data)


@pytest.mark.slow
def test_trained_curve_is_monotone():
    spec = NetworkSpec.parse(
        "affine(10,64) relu affine(64,64) relu affine(64,2)", "softmax-cross-entropy"
    )
    splits = split(gen_two_gaussians(1000, 10, 6.0, seed=0), seed=0)
    config = TrainConfig(0.05, momentum=0.9, batch_size=32, max_epochs=100, patience=10)
    record = sgd_train(spec, init_params(spec, scale=0.05, seed=0), splits, config)
    curve = interp_curve(spec, splits, record.theta_i, record.theta_f, parse_grid("coarse-50"))
    report = bump_report(curve)
    assert report.violation_mass <= 0.01 * (curve.j_train[0] - curve.j_train[-1])
    assert report.n_local_minima == 0
    assert curve.err_rate[-1] <= 0.01


@pytest.mark.slow
@pytest.mark.skipif(
    "LP_MNIST" not in os.environ, reason="set LP_MNIST to download the MNIST files"
)
def test_mnist_sigmoid_curve():
    config = load_config(Path(__file__).parents[2] / "configs" / "mnist_sigmoid.cfg")
    splits = config.data.load()
    theta_i = init_params(config.spec, scale=config.init_scale, seed=config.init_seed)
    record = sgd_train(config.spec, theta_i, splits, config.train)
    assert misclassification_rate(config.spec, record.theta_f, splits.test) <= 0.025
    curve = interp_curve(
        config.spec, splits, record.theta_i, record.theta_f, parse_grid(config.probe.grid)
    )
    report = bump_report(curve, tolerance=1e-4 * curve.j_train[0])
    assert report.n_local_minima == 0
    trace = projection_trace(record, keep_directions=False)
    logger.info(f"max residual ratio on MNIST: {trace.max_residual_ratio:.4g}")
