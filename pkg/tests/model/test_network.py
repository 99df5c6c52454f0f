import numpy as np
import pytest
from landscape_probe.errors import EmptyDatasetError, EvaluationError, StructureError
from landscape_probe.model import (
    MEAN_SQUARED_ERROR,
    Affine,
    Batch,
    Identity,
    NetworkSpec,
    ParamVector,
    build_deep_linear_chain,
    combine_totals,
    forward,
    grad,
    hvp,
    loss_and_grad,
    loss_total,
    min_kink_distance,
    rescale_relu,
)
from numpy.testing import assert_allclose, assert_array_equal

ACTIVATION_SPECS = {
    "sigmoid": ("affine(3,5) sigmoid affine(5,2)", "softmax-cross-entropy"),
    "relu": ("affine(3,5) relu affine(5,4) relu affine(4,2)", "softmax-cross-entropy"),
    "maxout": ("affine(3,6) maxout(2) affine(3,2)", "softmax-cross-entropy"),
    "identity": ("affine(3,4) identity affine(4,2)", "mean-squared-error"),
}


@pytest.fixture
def scalar_model():
    return build_deep_linear_chain([1, 1, 1]), Batch([[1.0]], [[1.0]])


def _random_case(spec: NetworkSpec, seed: int, n: int = 5):
    rng = np.random.default_rng(seed)
    params = ParamVector(rng.normal(scale=0.8, size=spec.n_params), spec.manifest())
    inputs = rng.normal(size=(n, spec.input_dim))
    if spec.loss == MEAN_SQUARED_ERROR:
        targets = rng.normal(size=(n, spec.output_dim))
    else:
        targets = rng.integers(0, spec.output_dim, size=n)
    return params, Batch(inputs, targets)


def _finite_difference(spec, params, batch, h=1e-6):
    values = params.values
    fd = np.empty(len(params))
    for idx in range(len(params)):
        step = np.zeros(len(params))
        step[idx] = h
        plus = forward(spec, params.with_values(values + step), batch).losses.sum()
        minus = forward(spec, params.with_values(values - step), batch).losses.sum()
        fd[idx] = (plus - minus) / (2 * h)
    return fd


def test_parse_and_describe():
    spec = NetworkSpec.parse("affine(10,64) relu affine(64,2)")
    assert spec.input_dim == 10
    assert spec.output_dim == 2
    assert spec.n_params == 834
    assert NetworkSpec.parse(spec.layers_text(), spec.loss) == spec
    assert spec.digest() == NetworkSpec.parse("affine(10,64)  relu  affine(64,2)").digest()
    assert spec.digest() != NetworkSpec.parse("affine(10,64) sigmoid affine(64,2)").digest()
    names = [seg.name for seg in spec.manifest()]
    assert names == ["layer0.W", "layer0.b", "layer2.W", "layer2.b"]


@pytest.mark.parametrize(
    "layers, loss",
    [
        ("affine(3,4) relu affine(5,2)", "softmax-cross-entropy"),
        ("relu affine(3,2)", "softmax-cross-entropy"),
        ("affine(3,5) maxout(2)", "mean-squared-error"),
        ("affine(3,4) tanh", "mean-squared-error"),
        ("affine(3,1)", "softmax-cross-entropy"),
        ("affine(3,2)", "hinge"),
    ],
)
def test_invalid_spec(layers, loss):
    with pytest.raises(StructureError):
        NetworkSpec.parse(layers, loss)


def test_forward_maxout_picks_largest_piece():
    spec = NetworkSpec.parse("affine(1,2,nobias) maxout(2)", "mean-squared-error")
    params = ParamVector([1.0, -0.5], spec.manifest())
    result = forward(spec, params, Batch([[1.0]], [[0.0]]))
    assert_array_equal(result.outputs, [[1.0]])


def test_forward_maxout_tie_goes_to_lowest_index():
    spec = NetworkSpec.parse("affine(1,2,nobias) maxout(2) affine(1,2,nobias)")
    params = ParamVector([0.5, 0.5, 1.0, -1.0], spec.manifest())
    g = grad(spec, params, Batch([[1.0]], [0]))
    # only the first piece receives gradient
    assert g.segment("layer0.W")[0, 0] != 0.0
    assert g.segment("layer0.W")[0, 1] == 0.0


def test_forward_identity_layer():
    spec = NetworkSpec((Affine(3, 3), Identity()), MEAN_SQUARED_ERROR)
    blocks = {"layer0.W": np.eye(3), "layer0.b": np.zeros((1, 3))}
    params = ParamVector.from_segments(spec.manifest(), blocks)
    inputs = np.array([[0.1, -2.0, 3.5], [4.0, 0.0, -0.25]])
    result = forward(spec, params, Batch(inputs, np.zeros((2, 3))))
    assert_array_equal(result.outputs, inputs)


def test_forward_scalar_model(scalar_model):
    spec, batch = scalar_model
    result = forward(spec, ParamVector([1.0, 1.0], spec.manifest()), batch)
    assert_array_equal(result.losses, [0.0])
    assert not result.nonfinite.any()


def test_forward_structure_errors(scalar_model):
    spec, batch = scalar_model
    other = build_deep_linear_chain([1, 2, 1])
    with pytest.raises(StructureError):
        forward(other, ParamVector([1.0, 1.0], spec.manifest()), batch)
    with pytest.raises(StructureError):
        forward(spec, ParamVector([1.0, 1.0], spec.manifest()), Batch([[1.0, 2.0]], [[1.0]]))


def test_loss_total(scalar_model):
    spec, batch = scalar_model
    assert loss_total(spec, ParamVector([0.0, 0.0], spec.manifest()), batch).total == 1.0
    assert loss_total(spec, ParamVector([0.5, 0.5], spec.manifest()), batch).total == 0.5625


def test_loss_total_is_additive():
    spec = NetworkSpec.parse("affine(3,5) sigmoid affine(5,2)")
    params, batch = _random_case(spec, 0, n=17)
    doubled = Batch(np.vstack([batch.inputs, batch.inputs]), np.concatenate([batch.targets] * 2))
    single = loss_total(spec, params, batch)
    double = loss_total(spec, params, doubled)
    assert double.total == 2 * single.total
    assert double.mean == single.mean


@pytest.mark.parametrize("seed", range(50))
def test_loss_total_disjoint_partitions(seed):
    spec = NetworkSpec.parse("affine(3,5) sigmoid affine(5,2)")
    params, batch = _random_case(spec, seed, n=301)
    head = Batch(batch.inputs[:137], batch.targets[:137])
    tail = Batch(batch.inputs[137:], batch.targets[137:])
    whole = loss_total(spec, params, batch)
    merged = combine_totals([loss_total(spec, params, head), loss_total(spec, params, tail)])
    assert merged.total == whole.total
    assert merged.mean == whole.mean


def test_combine_totals_empty():
    with pytest.raises(EmptyDatasetError):
        combine_totals([])


def test_loss_total_errors(scalar_model):
    spec, _ = scalar_model
    with pytest.raises(EmptyDatasetError):
        empty = Batch(np.zeros((0, 1)), np.zeros((0, 1)))
        loss_total(spec, ParamVector([1.0, 1.0], spec.manifest()), empty)
    with pytest.raises(EvaluationError) as err:
        loss_total(
            spec,
            ParamVector([1e200, 1e200], spec.manifest()),
            Batch([[1.0], [2.0]], [[1.0], [1.0]]),
        )
    assert err.value.n_nonfinite == 2


def test_grad_scalar_model(scalar_model):
    spec, batch = scalar_model
    g = grad(spec, ParamVector([0.5, 0.5], spec.manifest()), batch)
    assert_array_equal(g.values, [-0.75, -0.75])
    assert g.manifest == spec.manifest()
    at_minimum = grad(spec, ParamVector([1.0, 1.0], spec.manifest()), batch)
    assert_array_equal(at_minimum.values, [0.0, 0.0])


def test_loss_and_grad_agrees_with_forward():
    spec = NetworkSpec.parse("affine(3,5) relu affine(5,2)")
    params, batch = _random_case(spec, 3)
    losses, g = loss_and_grad(spec, params, batch)
    assert_array_equal(losses, forward(spec, params, batch).losses)
    assert g == grad(spec, params, batch)


def test_grad_dead_relu_units():
    spec = NetworkSpec.parse("affine(2,3) relu affine(3,2)")
    blocks = {
        "layer0.W": -np.ones((2, 3)),
        "layer0.b": -np.ones((1, 3)),
        "layer2.W": np.arange(6.0).reshape(3, 2),
        "layer2.b": np.zeros((1, 2)),
    }
    params = ParamVector.from_segments(spec.manifest(), blocks)
    batch = Batch([[1.0, 2.0], [0.5, 0.1]], [0, 1])
    g = grad(spec, params, batch)
    assert_array_equal(g.segment("layer0.W"), np.zeros((2, 3)))
    assert_array_equal(g.segment("layer0.b"), np.zeros((1, 3)))


@pytest.mark.parametrize("activation", sorted(ACTIVATION_SPECS))
def test_grad_matches_finite_differences(activation):
    spec = NetworkSpec.parse(*ACTIVATION_SPECS[activation])
    assert spec.n_params <= 500
    checked = 0
    for seed in range(100):
        params, batch = _random_case(spec, seed)
        if min_kink_distance(spec, params, batch.inputs) < 1e-4:
            continue
        g = grad(spec, params, batch).values
        fd = _finite_difference(spec, params, batch)
        assert np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-8) < 1e-6
        checked += 1
        if checked == 20:
            break
    assert checked == 20


def test_hvp_scalar_model(scalar_model):
    spec, batch = scalar_model
    params = ParamVector([1.0, 1.0], spec.manifest())
    # Hessian of (1 - w1 w2)^2 at (1, 1) is [[2, 2], [2, 2]]
    result = hvp(spec, params, ParamVector([1.0, 0.0], spec.manifest()), batch)
    assert_allclose(result.values, [2.0, 2.0], atol=1e-8)


def test_hvp_identity_hessian():
    spec = NetworkSpec.parse("affine(2,2,nobias) identity", "mean-squared-error")
    scale = np.sqrt(0.5)
    # J = |W|^2 / 2 for inputs sqrt(1/2) I and zero targets
    batch = Batch(scale * np.eye(2), np.zeros((2, 2)))
    rng = np.random.default_rng(1)
    params = ParamVector(rng.normal(size=4), spec.manifest())
    direction = ParamVector(rng.normal(size=4), spec.manifest())
    assert_allclose(hvp(spec, params, direction, batch).values, direction.values, rtol=1e-7)


def test_hvp_zero_direction_and_symmetry():
    spec = NetworkSpec.parse("affine(3,5) sigmoid affine(5,2)")
    params, batch = _random_case(spec, 7)
    zero = ParamVector.zeros(spec.manifest())
    assert hvp(spec, params, zero, batch) == zero
    rng = np.random.default_rng(8)
    u = ParamVector(rng.normal(size=len(params)), spec.manifest())
    v = ParamVector(rng.normal(size=len(params)), spec.manifest())
    u_hv = u.dot(hvp(spec, params, v, batch))
    v_hu = v.dot(hvp(spec, params, u, batch))
    assert_allclose(u_hv, v_hu, rtol=1e-4, atol=1e-4)


def test_hvp_manifest_mismatch(scalar_model):
    spec, batch = scalar_model
    other = ParamVector([1.0], [("w", 0, 1, 1)])
    with pytest.raises(StructureError):
        hvp(spec, ParamVector([1.0, 1.0], spec.manifest()), other, batch)


@pytest.fixture
def relu_case():
    spec = NetworkSpec.parse("affine(4,6) relu affine(6,3)", "mean-squared-error")
    rng = np.random.default_rng(11)
    params = ParamVector(rng.normal(size=spec.n_params), spec.manifest())
    batch = Batch(rng.normal(size=(100, 4)), np.zeros((100, 3)))
    return spec, params, batch


@pytest.mark.parametrize("gamma", [0.5, 2.0, 10.0])
def test_rescale_relu_preserves_function(relu_case, gamma):
    spec, params, batch = relu_case
    rescaled = rescale_relu(spec, params, 0, 2, gamma)
    assert rescaled != params
    assert_allclose(
        forward(spec, rescaled, batch).outputs, forward(spec, params, batch).outputs, atol=1e-10
    )


def test_rescale_relu_inverse_and_identity(relu_case):
    spec, params, _ = relu_case
    assert rescale_relu(spec, params, 0, 1, 1.0) is params
    back = rescale_relu(spec, rescale_relu(spec, params, 0, 1, 2.0), 0, 1, 0.5)
    assert_allclose(back.values, params.values, atol=1e-12)


def test_rescale_relu_errors(relu_case):
    spec, params, _ = relu_case
    with pytest.raises(ValueError):
        rescale_relu(spec, params, 0, 1, -1.0)
    with pytest.raises(StructureError):
        rescale_relu(spec, params, 2, 1, 2.0)
    with pytest.raises(ValueError):
        rescale_relu(spec, params, 0, 6, 2.0)


def test_build_deep_linear_chain():
    scalar = build_deep_linear_chain([1, 1, 1])
    assert scalar.n_params == 2
    assert scalar.loss == MEAN_SQUARED_ERROR
    deep = build_deep_linear_chain([4] * 10 + [2])
    assert len([seg for seg in deep.manifest() if seg.name.endswith(".W")]) == 10
    assert build_deep_linear_chain([3, 2]).n_params == 6
    with pytest.raises(ValueError):
        build_deep_linear_chain([3])


def test_min_kink_distance_without_kinks(scalar_model):
    spec, batch = scalar_model
    assert min_kink_distance(spec, ParamVector([1.0, 1.0], spec.manifest()), batch.inputs) == np.inf
