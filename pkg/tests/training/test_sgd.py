import numpy as np
import pytest
from landscape_probe.datasets import (
    Dataset,
    Splits,
    gen_scalar_regression,
    gen_two_gaussians,
    split,
)
from landscape_probe.errors import DivergedError, StructureError
from landscape_probe.model import NetworkSpec, ParamVector, build_deep_linear_chain, grad
from landscape_probe.training import TrainConfig, TrajectoryRecord, init_params, sgd_train
from numpy.testing import assert_allclose


@pytest.fixture
def gaussian_case():
    spec = NetworkSpec.parse("affine(4,8) relu affine(8,2)", "softmax-cross-entropy")
    splits = split(gen_two_gaussians(200, 4, 3.0, seed=2), seed=2)
    return spec, splits


def test_init_params():
    spec = NetworkSpec.parse("affine(5,7) sigmoid affine(7,3)", "softmax-cross-entropy")
    theta = init_params(spec, scale=0.05, seed=0)
    blocks = theta.blocks()
    for name in ("layer0.W", "layer2.W"):
        assert np.all(np.abs(blocks[name]) < 0.05)
        assert np.any(blocks[name] != 0)
    for name in ("layer0.b", "layer2.b"):
        assert np.all(blocks[name] == 0)
    assert init_params(spec, seed=0) == theta
    assert init_params(spec, seed=1) != theta
    with pytest.raises(ValueError):
        init_params(spec, scale=0.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": 0.0},
        {"learning_rate": 0.1, "momentum": 1.0},
        {"learning_rate": 0.1, "momentum": -0.1},
        {"learning_rate": 0.1, "batch_size": 0},
        {"learning_rate": 0.1, "max_epochs": 0},
        {"learning_rate": 0.1, "patience": 0},
        {"learning_rate": 0.1, "snapshot_every": 0},
    ],
)
def test_config_invalid(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_config_to_dict():
    config = TrainConfig(0.1, momentum=0.9, patience=None)
    assert TrainConfig(**config.to_dict()) == config


def test_single_step():
    # J = theta^2 / 2 with the summed squared error on one example
    spec = NetworkSpec.parse("affine(1,1,nobias)", "mean-squared-error")
    data = Dataset(np.array([[np.sqrt(0.5)]]), np.array([[0.0]]))
    theta = ParamVector([1.0], spec.manifest())
    config = TrainConfig(0.1, batch_size=1, max_epochs=1, patience=None)
    record = sgd_train(spec, theta, data, config)
    assert abs(record.snapshots[-1].values[0] - 0.9) < 1e-12


def test_scalar_convergence():
    spec = build_deep_linear_chain([1, 1, 1])
    theta = ParamVector([0.1, 0.1], spec.manifest())
    config = TrainConfig(0.05, batch_size=1, max_epochs=500, patience=None)
    record = sgd_train(spec, theta, gen_scalar_regression(), config)
    w1, w2 = record.snapshots[-1].values
    assert abs(1.0 - w1 * w2) < 1e-3
    assert len(record) == 501
    assert record.valid_objective is None
    assert record.train_error is None


def test_divergence():
    spec = build_deep_linear_chain([1, 1, 1])
    theta = ParamVector([0.1, 0.1], spec.manifest())
    config = TrainConfig(10.0, batch_size=1, max_epochs=50, patience=None)
    with pytest.raises(DivergedError) as err:
        with np.errstate(over="ignore", invalid="ignore"):
            sgd_train(spec, theta, gen_scalar_regression(), config)
    assert np.all(np.isfinite(err.value.last_finite.values))
    assert err.value.epoch >= 1


def test_wrong_manifest(gaussian_case):
    spec, splits = gaussian_case
    other = NetworkSpec.parse("affine(4,3) relu affine(3,2)", "softmax-cross-entropy")
    with pytest.raises(StructureError):
        sgd_train(spec, init_params(other, seed=0), splits, TrainConfig(0.1))


def test_deterministic(gaussian_case):
    spec, splits = gaussian_case
    theta = init_params(spec, seed=0)
    config = TrainConfig(0.1, momentum=0.9, batch_size=16, max_epochs=5, patience=None)
    first = sgd_train(spec, theta, splits, config)
    assert sgd_train(spec, theta, splits, config) == first
    reshuffled = TrainConfig(
        0.1, momentum=0.9, batch_size=16, max_epochs=5, patience=None, seed=1
    )
    assert sgd_train(spec, theta, splits, reshuffled).snapshots[-1] != first.snapshots[-1]


def test_full_batch_step(gaussian_case):
    spec, splits = gaussian_case
    theta = init_params(spec, seed=0)
    n = len(splits.train)
    config = TrainConfig(0.5, batch_size=n, max_epochs=1, patience=None)
    record = sgd_train(spec, theta, splits, config)
    expected = theta.values - 0.5 * grad(spec, theta, splits.train).values / n
    assert_allclose(record.snapshots[1].values, expected, rtol=1e-12, atol=1e-15)


def test_record_invariants(gaussian_case):
    spec, splits = gaussian_case
    theta = init_params(spec, seed=0)
    config = TrainConfig(0.2, momentum=0.9, batch_size=8, max_epochs=60, patience=5)
    record = sgd_train(spec, theta, splits, config)
    assert record.snapshots[0] == record.theta_i
    assert record.epochs[0] == 0
    assert np.all(np.diff(record.epochs) == 1)
    recorded = record.valid_objective[record.epochs]
    assert record.solution_index == int(np.argmin(recorded))
    assert record.valid_objective[record.solution_epoch] == recorded.min()
    last = int(record.epochs[-1])
    assert len(record.train_objective) == last + 1
    assert len(record.train_error) == last + 1
    if last < config.max_epochs:
        assert last - record.solution_epoch == config.patience


def test_snapshot_every(gaussian_case):
    spec, splits = gaussian_case
    config = TrainConfig(0.1, batch_size=32, max_epochs=7, patience=None, snapshot_every=3)
    record = sgd_train(spec, init_params(spec, seed=0), splits, config)
    assert record.epochs.tolist() == [0, 3, 6, 7]
    assert len(record.train_objective) == 8


def test_training_split_selection():
    spec = build_deep_linear_chain([1, 1, 1])
    theta = ParamVector([0.1, 0.1], spec.manifest())
    config = TrainConfig(0.05, batch_size=1, max_epochs=50, patience=None)
    record = sgd_train(spec, theta, Splits(gen_scalar_regression()), config)
    assert record.solution_index == len(record) - 1


def test_record_validation():
    spec = build_deep_linear_chain([1, 1, 1])
    points = [ParamVector(p, spec.manifest()) for p in ([0.1, 0.1], [0.2, 0.2])]
    with pytest.raises(ValueError):
        TrajectoryRecord(spec, points[1], [0, 1], points, 1, np.zeros(2))
    with pytest.raises(ValueError):
        TrajectoryRecord(spec, points[0], [0, 0], points, 1, np.zeros(2))
    with pytest.raises(ValueError):
        TrajectoryRecord(spec, points[0], [1, 2], points, 1, np.zeros(3))
    with pytest.raises(ValueError):
        TrajectoryRecord(spec, points[0], [0, 1], points, 2, np.zeros(2))
    with pytest.raises(StructureError):
        TrajectoryRecord(spec, points[0], [0, 1, 2], points, 1, np.zeros(3))
