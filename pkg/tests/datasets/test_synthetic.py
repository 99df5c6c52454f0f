import numpy as np
import pytest
from landscape_probe.datasets import (
    Dataset,
    Splits,
    gen_scalar_regression,
    gen_two_gaussians,
    split,
)
from landscape_probe.model import ParamVector, build_deep_linear_chain, loss_total
from numpy.testing import assert_array_equal
from sklearn.linear_model import LogisticRegression


def test_two_gaussians_deterministic():
    first = gen_two_gaussians(200, 5, 3.0, seed=4)
    second = gen_two_gaussians(200, 5, 3.0, seed=4)
    assert first == second
    assert first != gen_two_gaussians(200, 5, 3.0, seed=5)
    assert first.n_classes == 2
    assert first.split == "train"
    assert np.count_nonzero(first.targets == 0) == 100


def test_two_gaussians_centers():
    data = gen_two_gaussians(4000, 3, 6.0, seed=0)
    means = [data.inputs[data.targets == label].mean(axis=0) for label in (0, 1)]
    assert np.all(np.abs(means[0] + 3.0) < 0.1)
    assert np.all(np.abs(means[1] - 3.0) < 0.1)


def test_two_gaussians_separable():
    data = gen_two_gaussians(1000, 10, 6.0, seed=0)
    # a linear classifier separates the classes, so a ReLU net can too
    oracle = LogisticRegression().fit(data.inputs, data.targets)
    assert oracle.score(data.inputs, data.targets) >= 0.99


def test_two_gaussians_without_separation():
    data = gen_two_gaussians(4000, 2, 0.0, seed=1)
    means = [data.inputs[data.targets == label].mean(axis=0) for label in (0, 1)]
    assert np.all(np.abs(means[0] - means[1]) < 0.15)


def test_two_gaussians_invalid():
    with pytest.raises(ValueError):
        gen_two_gaussians(1, 2, 1.0)
    with pytest.raises(ValueError):
        gen_two_gaussians(10, 0, 1.0)


def test_scalar_regression():
    data = gen_scalar_regression()
    assert len(data) == 1
    spec = build_deep_linear_chain([1, 1, 1])
    assert loss_total(spec, ParamVector([2.0, 0.5], spec.manifest()), data).total == 0.0
    assert loss_total(spec, ParamVector([0.0, 3.0], spec.manifest()), data).total == 1.0


def test_split_sizes():
    data = gen_two_gaussians(101, 2, 1.0, seed=0)
    splits = split(data, (0.8, 0.1, 0.1), seed=0)
    sizes = [len(s) for s in splits]
    assert sum(sizes) == 101
    assert sizes == [81, 10, 10]
    assert [s.split for s in splits] == ["train", "valid", "test"]
    assert splits.selection is splits.valid
    combined = np.sort(np.concatenate([s.inputs[:, 0] for s in splits]))
    assert_array_equal(combined, np.sort(data.inputs[:, 0]))


def test_split_deterministic_and_train_only():
    data = gen_two_gaussians(50, 2, 1.0, seed=0)
    assert split(data, seed=3) == split(data, seed=3)
    only_train = split(data, (1.0, 0.0, 0.0), seed=0)
    assert len(only_train.train) == 50
    assert only_train.valid is None and only_train.test is None
    assert only_train.selection is only_train.train


@pytest.mark.parametrize(
    "fractions", [(0.5, 0.5), (0.7, 0.2, 0.2), (-0.1, 0.6, 0.5), (0.0, 0.5, 0.5)]
)
def test_split_invalid(fractions):
    with pytest.raises(ValueError):
        split(gen_two_gaussians(50, 2, 1.0, seed=0), fractions)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), n_classes=2)
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array([0, 3]), n_classes=2)
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan, 1.0]]), np.array([0]), n_classes=2)
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 2)), np.array([0]), split="holdout", n_classes=2)


def test_splits_default():
    data = gen_scalar_regression()
    assert Splits(data).selection is data
