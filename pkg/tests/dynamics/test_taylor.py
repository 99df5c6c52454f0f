import numpy as np
import pytest
from landscape_probe.datasets import gen_scalar_regression
from landscape_probe.dynamics import (
    curvature_along_gradient,
    gradient_flow,
    second_order_prediction,
    squared_gradient_identity,
    taylor_check,
)
from landscape_probe.model import Batch, NetworkSpec, ParamVector, build_deep_linear_chain, grad
from numpy.testing import assert_allclose


@pytest.fixture
def scalar():
    spec = build_deep_linear_chain([1, 1, 1])
    return spec, ParamVector([0.5, 0.5], spec.manifest()), gen_scalar_regression()


def test_flow_zero_time(scalar):
    spec, params, data = scalar
    assert gradient_flow(spec, params, data, 0.0) is params
    with pytest.raises(ValueError):
        gradient_flow(spec, params, data, -1.0)


def test_flow_linear_model():
    # for J = (theta - 1)^2 the flow is theta(t) = 1 + (theta(0) - 1) exp(-2t)
    spec = NetworkSpec.parse("affine(1,1,nobias)", "mean-squared-error")
    data = Batch([[1.0]], [[1.0]])
    flow = gradient_flow(spec, ParamVector([3.0], spec.manifest()), data, 0.7)
    assert abs(flow.values[0] - (1.0 + 2.0 * np.exp(-1.4))) < 1e-10


def test_zero_discrepancy(scalar):
    spec, params, data = scalar
    table = taylor_check(spec, params, data, [0.0])
    assert table["discrepancy"][0] == 0.0
    assert table["first_order_discrepancy"][0] == 0.0


def test_scalar_small_t(scalar):
    spec, params, data = scalar
    table = taylor_check(spec, params, data, [0.01])
    assert table["discrepancy"][0] < 1e-6
    assert table["first_order_discrepancy"][0] > table["discrepancy"][0]


def test_cubic_shrinkage(scalar):
    spec, params, data = scalar
    table = taylor_check(spec, params, data, [0.1, 0.05])
    assert table.columns.tolist() == [
        "t",
        "discrepancy",
        "first_order_discrepancy",
        "half_t_discrepancy",
        "shrink_factor",
    ]
    for factor in table["shrink_factor"]:
        assert 6.0 <= factor <= 10.0
    assert table["half_t_discrepancy"][0] == table["discrepancy"][1]


def test_quadratic_shrinkage():
    spec = NetworkSpec.parse("affine(3,1)", "mean-squared-error")
    rng = np.random.default_rng(0)
    data = Batch(rng.normal(size=(20, 3)), rng.normal(size=(20, 1)))
    params = ParamVector(rng.normal(size=spec.n_params), spec.manifest())
    table = taylor_check(spec, params, data, [0.002])
    assert 6.0 <= table["shrink_factor"][0] <= 10.0


def test_second_order_prediction(scalar):
    spec, params, data = scalar
    table = taylor_check(spec, params, data, [0.02])
    flow = gradient_flow(spec, params, data, 0.02)
    predicted = second_order_prediction(spec, params, data, 0.02)
    assert (flow - predicted).norm() == table["discrepancy"][0]


def test_squared_gradient_identity():
    rng = np.random.default_rng(0)
    for seed in range(10):
        hidden = int(rng.integers(2, 5))
        spec = NetworkSpec.parse(
            f"affine(3,{hidden}) sigmoid affine({hidden},2)", "softmax-cross-entropy"
        )
        case = np.random.default_rng(seed)
        params = ParamVector(case.normal(size=spec.n_params), spec.manifest())
        data = Batch(case.normal(size=(6, 3)), case.integers(0, 2, size=6))
        identity = squared_gradient_identity(spec, params, data)
        assert identity.relative_error < 1e-3
        assert_allclose(
            identity.finite_difference.values, identity.two_hvp.values, rtol=1e-3, atol=1e-6
        )


@pytest.mark.parametrize("point, lengthens", [((0.5, 0.5), True), ((1.2, 1.2), False)])
def test_curvature_sign(point, lengthens):
    spec = build_deep_linear_chain([1, 1, 1])
    params = ParamVector(point, spec.manifest())
    data = gen_scalar_regression()
    curvature = curvature_along_gradient(spec, params, data)
    assert curvature.lengthens_step is lengthens
    t = 1e-2
    g = grad(spec, params, data)
    second = (second_order_prediction(spec, params, data, t) - params).norm()
    assert (second > t * g.norm()) is lengthens
