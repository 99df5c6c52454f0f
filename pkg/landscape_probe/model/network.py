"""Feedforward networks over flat parameter vectors.

Networks are described by an immutable :class:`NetworkSpec`; all evaluation
functions are pure functions of ``(spec, params, batch)``.
"""
from __future__ import annotations

import hashlib
import itertools
import math
import re
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from landscape_probe.errors import EmptyDatasetError, EvaluationError, StructureError
from landscape_probe.model.params import Manifest, ParamVector, Segment, check_manifest

SOFTMAX_CROSS_ENTROPY = "softmax-cross-entropy"
MEAN_SQUARED_ERROR = "mean-squared-error"
LOSSES = (SOFTMAX_CROSS_ENTROPY, MEAN_SQUARED_ERROR)


@dataclass(frozen=True)
class Affine:
    """Affine map ``x @ W + b`` with ``W`` of shape ``(n_in, n_out)``."""

    n_in: int
    n_out: int
    bias: bool = True

    def describe(self) -> str:
        if self.bias:
            return f"affine({self.n_in},{self.n_out})"
        return f"affine({self.n_in},{self.n_out},nobias)"


@dataclass(frozen=True)
class Sigmoid:
    def describe(self) -> str:
        return "sigmoid"


@dataclass(frozen=True)
class ReLU:
    def describe(self) -> str:
        return "relu"


@dataclass(frozen=True)
class Identity:
    def describe(self) -> str:
        return "identity"


@dataclass(frozen=True)
class Maxout:
    """Maximum over ``pieces`` consecutive affine outputs per unit.

    Unit ``u`` takes the maximum over columns ``u*k ... u*k+k-1`` of the
    preceding affine output. Ties go to the lowest piece index.
    """

    pieces: int

    def describe(self) -> str:
        return f"maxout({self.pieces})"


Layer = Union[Affine, Sigmoid, ReLU, Identity, Maxout]

_LAYER_PATTERN = re.compile(r"^(\w+)(?:\(([^)]*)\))?$")


def _parse_layer(token: str) -> Layer:
    match = _LAYER_PATTERN.match(token.strip())
    if match is None:
        raise StructureError(f"Cannot parse layer description {token!r}")
    name, raw_args = match.group(1).lower(), match.group(2)
    args = [a.strip() for a in raw_args.split(",")] if raw_args else []
    try:
        if name == "affine":
            if len(args) == 3 and args[2] == "nobias":
                return Affine(int(args[0]), int(args[1]), bias=False)
            if len(args) != 2:
                raise StructureError(f"affine needs (in,out), got {token!r}")
            return Affine(int(args[0]), int(args[1]))
        if name == "maxout":
            if len(args) != 1:
                raise StructureError(f"maxout needs (pieces), got {token!r}")
            return Maxout(int(args[0]))
    except ValueError:
        raise StructureError(f"Non-integer layer argument in {token!r}")
    simple = {"sigmoid": Sigmoid, "relu": ReLU, "identity": Identity}
    if name in simple and not args:
        return simple[name]()
    raise StructureError(f"Unknown layer {token!r}")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a feedforward network.

    Attributes
    ----------
    layers: Tuple[Layer, ...]
        layer descriptors in order, the first has to be :class:`Affine`
    loss: str
        either ``"softmax-cross-entropy"`` or ``"mean-squared-error"``

    Examples
    --------
    >>> from landscape_probe.model import NetworkSpec
    >>> spec = NetworkSpec.parse("affine(10,64) relu affine(64,2)")
    >>> spec.input_dim, spec.output_dim, spec.n_params
    (10, 2, 834)
    """

    layers: Tuple[Layer, ...]
    loss: str = SOFTMAX_CROSS_ENTROPY
    _dims: Tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.loss not in LOSSES:
            raise StructureError(f"loss has to be one of {LOSSES}, but got {self.loss}")
        if len(self.layers) == 0 or not isinstance(self.layers[0], Affine):
            raise StructureError("The first layer has to be affine")
        dims = [self.layers[0].n_in]
        for idx, layer in enumerate(self.layers):
            current = dims[-1]
            if isinstance(layer, Affine):
                if layer.n_in != current:
                    raise StructureError(
                        f"Layer {idx} expects {layer.n_in} inputs, but previous"
                        f" layer provides {current}"
                    )
                if layer.n_in < 1 or layer.n_out < 1:
                    raise StructureError(f"Layer {idx} has non-positive width")
                dims.append(layer.n_out)
            elif isinstance(layer, Maxout):
                if layer.pieces < 2:
                    raise StructureError(f"maxout needs at least 2 pieces (layer {idx})")
                if not isinstance(self.layers[idx - 1], Affine):
                    raise StructureError(f"maxout layer {idx} has to follow an affine layer")
                if current % layer.pieces != 0:
                    raise StructureError(
                        f"maxout({layer.pieces}) at layer {idx} needs a width divisible"
                        f" by {layer.pieces}, got {current}"
                    )
                dims.append(current // layer.pieces)
            elif isinstance(layer, (Sigmoid, ReLU, Identity)):
                dims.append(current)
            else:
                raise StructureError(f"Unknown layer type {type(layer)}")
        if self.loss == SOFTMAX_CROSS_ENTROPY and dims[-1] < 2:
            raise StructureError("softmax-cross-entropy needs at least 2 outputs")
        object.__setattr__(self, "_dims", tuple(dims))

    @classmethod
    def parse(cls, layers: str, loss: str = SOFTMAX_CROSS_ENTROPY) -> NetworkSpec:
        """Create a spec from its text form, e.g. ``"affine(4,8) maxout(2) affine(4,2)"``."""
        tokens = re.findall(r"\w+(?:\([^)]*\))?", layers)
        return cls(tuple(_parse_layer(t) for t in tokens), loss)

    @property
    def input_dim(self) -> int:
        return self._dims[0]

    @property
    def output_dim(self) -> int:
        return self._dims[-1]

    def layers_text(self) -> str:
        return " ".join(layer.describe() for layer in self.layers)

    def describe(self) -> str:
        """Canonical text form used for digests and file headers."""
        return f"layers={self.layers_text()};loss={self.loss}"

    def digest(self) -> str:
        return hashlib.sha256(self.describe().encode("utf-8")).hexdigest()

    def manifest(self) -> Manifest:
        segments = []
        offset = 0
        for idx, layer in enumerate(self.layers):
            if isinstance(layer, Affine):
                segments.append(Segment(f"layer{idx}.W", offset, layer.n_in, layer.n_out))
                offset += layer.n_in * layer.n_out
                if layer.bias:
                    segments.append(Segment(f"layer{idx}.b", offset, 1, layer.n_out))
                    offset += layer.n_out
        return check_manifest(segments)

    @property
    def n_params(self) -> int:
        return sum(seg.size for seg in self.manifest())


@dataclass(frozen=True, eq=False)
class Batch:
    """Inputs with targets; labels for classification or real targets for regression."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=np.float64)
        if inputs.ndim == 1:
            inputs = inputs.reshape(-1, 1)
        targets = np.array(self.targets)
        if inputs.ndim != 2:
            raise StructureError(f"inputs have to be a matrix, got shape {inputs.shape}")
        if targets.shape[0] != inputs.shape[0]:
            raise StructureError(
                f"{inputs.shape[0]} input rows but {targets.shape[0]} targets"
            )
        inputs.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return self.inputs.shape[0]

    def take(self, indices: Sequence[int]) -> Batch:
        indices = np.asarray(indices, dtype=np.int64)
        return Batch(self.inputs[indices], self.targets[indices])


class ForwardResult(NamedTuple):
    losses: np.ndarray
    outputs: np.ndarray
    nonfinite: np.ndarray


class LossTotal(NamedTuple):
    """Objective over a split.

    ``losses`` keeps the per-example terms so that totals of disjoint parts
    can be merged with :func:`combine_totals` without a second rounding.
    """

    total: float
    mean: float
    losses: Tuple[float, ...] = ()


def combine_totals(parts: Sequence[LossTotal]) -> LossTotal:
    """Objective of the union of disjoint parts, in the order given.

    The result is identical to :func:`loss_total` on the concatenated data.

    Raises
    ------
    EmptyDatasetError
        if the parts hold no examples
    """
    losses = tuple(itertools.chain.from_iterable(part.losses for part in parts))
    if not losses:
        raise EmptyDatasetError("Cannot combine objectives without examples")
    total = math.fsum(losses)
    return LossTotal(total, total / len(losses), losses)


def check_params(spec: NetworkSpec, params: ParamVector):
    """Raise :class:`StructureError` if ``params`` does not fit ``spec``."""
    if not isinstance(params, ParamVector):
        raise TypeError(f"Expected ParamVector, got {type(params)}")
    if params.manifest != spec.manifest():
        raise StructureError("Parameter manifest does not match network spec")


def _check_inputs(spec: NetworkSpec, inputs: np.ndarray):
    if inputs.shape[1] != spec.input_dim:
        raise StructureError(
            f"Network expects {spec.input_dim} input features, got {inputs.shape[1]}"
        )


def _forward_pass(
    spec: NetworkSpec, params: ParamVector, inputs: np.ndarray
) -> Tuple[np.ndarray, List]:
    check_params(spec, params)
    _check_inputs(spec, inputs)
    activation = inputs
    cache: List = []
    for idx, layer in enumerate(spec.layers):
        if isinstance(layer, Affine):
            cache.append(activation)
            activation = activation @ params.segment(f"layer{idx}.W")
            if layer.bias:
                activation = activation + params.segment(f"layer{idx}.b")
        elif isinstance(layer, Sigmoid):
            activation = expit(activation)
            cache.append(activation)
        elif isinstance(layer, ReLU):
            cache.append(activation)
            activation = np.maximum(activation, 0.0)
        elif isinstance(layer, Maxout):
            n, width = activation.shape
            pieces = activation.reshape(n, width // layer.pieces, layer.pieces)
            winners = np.argmax(pieces, axis=2)
            cache.append((pieces, winners))
            activation = np.take_along_axis(pieces, winners[..., None], axis=2)[..., 0]
        else:
            cache.append(None)
    return activation, cache


def _one_hot_labels(targets: np.ndarray, n_classes: int) -> np.ndarray:
    labels = targets if targets.ndim == 1 else np.argmax(targets, axis=1)
    labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise StructureError(f"Labels have to be in [0, {n_classes})")
    return labels


def _loss_and_output_grad(
    spec: NetworkSpec, outputs: np.ndarray, targets: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    if spec.loss == SOFTMAX_CROSS_ENTROPY:
        labels = _one_hot_labels(targets, spec.output_dim)
        shift = np.max(outputs, axis=1, keepdims=True)
        exp = np.exp(outputs - shift)
        log_z = np.log(np.sum(exp, axis=1, keepdims=True)) + shift
        rows = np.arange(outputs.shape[0])
        losses = log_z[:, 0] - outputs[rows, labels]
        d_out = exp / np.sum(exp, axis=1, keepdims=True)
        d_out[rows, labels] -= 1.0
        return losses, d_out
    target_matrix = np.asarray(targets, dtype=np.float64).reshape(outputs.shape[0], -1)
    if target_matrix.shape[1] != outputs.shape[1]:
        raise StructureError(
            f"Targets have {target_matrix.shape[1]} columns, network outputs"
            f" {outputs.shape[1]}"
        )
    diff = outputs - target_matrix
    return np.sum(diff * diff, axis=1), 2.0 * diff


def forward(spec: NetworkSpec, params: ParamVector, batch: Batch) -> ForwardResult:
    """Evaluate the network and per-example losses.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    params : ParamVector
        parameters with ``spec.manifest()``
    batch : Batch
        inputs and targets

    Returns
    -------
    ForwardResult
        per-example ``losses``, ``outputs`` of shape (examples, output_dim)
        and a boolean ``nonfinite`` mask flagging examples whose loss is not finite

    Raises
    ------
    StructureError
        if the manifest or input width does not match the spec

    Examples
    --------
    >>> from landscape_probe.model import build_deep_linear_chain, forward, Batch
    >>> spec = build_deep_linear_chain([1, 1, 1])
    >>> theta = ParamVector([1.0, 1.0], spec.manifest())
    >>> forward(spec, theta, Batch([[1.0]], [[1.0]])).losses
    array([0.])
    """
    with np.errstate(over="ignore", invalid="ignore"):
        outputs, _ = _forward_pass(spec, params, batch.inputs)
        losses, _ = _loss_and_output_grad(spec, outputs, batch.targets)
    return ForwardResult(losses, outputs, ~np.isfinite(losses))


def loss_total(spec: NetworkSpec, params: ParamVector, dataset: Batch) -> LossTotal:
    """Sum and mean of per-example losses over a whole split.

    The sum is computed with :func:`math.fsum` over the examples in index
    order, which makes it correctly rounded and independent of the
    evaluation backend. Totals of disjoint parts merge exactly with
    :func:`combine_totals`.

    Raises
    ------
    EmptyDatasetError
        if the dataset has no rows
    EvaluationError
        if any per-example loss is not finite
    """
    if len(dataset) == 0:
        raise EmptyDatasetError("Cannot compute the objective of an empty dataset")
    result = forward(spec, params, dataset)
    n_bad = int(np.count_nonzero(result.nonfinite))
    if n_bad > 0:
        raise EvaluationError(
            f"{n_bad}/{len(dataset)} examples have a non-finite loss", n_nonfinite=n_bad
        )
    losses = tuple(result.losses.tolist())
    total = math.fsum(losses)
    return LossTotal(total, total / len(dataset), losses)


def loss_and_grad(
    spec: NetworkSpec, params: ParamVector, batch: Batch
) -> Tuple[np.ndarray, ParamVector]:
    """Per-example losses and the gradient of their sum (backpropagation)."""
    with np.errstate(over="ignore", invalid="ignore"):
        outputs, cache = _forward_pass(spec, params, batch.inputs)
        losses, delta = _loss_and_output_grad(spec, outputs, batch.targets)
        blocks = {}
        for idx in reversed(range(len(spec.layers))):
            layer = spec.layers[idx]
            saved = cache[idx]
            if isinstance(layer, Affine):
                weights = params.segment(f"layer{idx}.W")
                blocks[f"layer{idx}.W"] = saved.T @ delta
                if layer.bias:
                    blocks[f"layer{idx}.b"] = np.sum(delta, axis=0, keepdims=True)
                if idx > 0:
                    delta = delta @ weights.T
            elif isinstance(layer, Sigmoid):
                delta = delta * saved * (1.0 - saved)
            elif isinstance(layer, ReLU):
                delta = delta * (saved > 0.0)
            elif isinstance(layer, Maxout):
                pieces, winners = saved
                routed = np.zeros_like(pieces)
                np.put_along_axis(routed, winners[..., None], delta[..., None], axis=2)
                delta = routed.reshape(pieces.shape[0], -1)
    return losses, ParamVector.from_segments(params.manifest, blocks)


def grad(spec: NetworkSpec, params: ParamVector, batch: Batch) -> ParamVector:
    """Gradient of the summed batch loss with respect to all parameters.

    Maxout routes the gradient only to the winning piece; ReLU uses
    derivative 0 at the kink.

    Returns
    -------
    ParamVector
        gradient with the same manifest as ``params``
    """
    return loss_and_grad(spec, params, batch)[1]


def hvp(
    spec: NetworkSpec, params: ParamVector, direction: ParamVector, dataset: Batch
) -> ParamVector:
    """Hessian-vector product of the summed loss by central differences of :func:`grad`.

    Uses ``(g(θ+hd) - g(θ-hd)) / 2h`` with
    ``h = 1e-4 * max(1, |θ|) / max(1e-12, |d|)``.
    A zero direction returns the zero vector.

    Raises
    ------
    StructureError
        if ``direction`` has a different manifest
    """
    check_params(spec, params)
    if direction.manifest != params.manifest:
        raise StructureError("direction and params have different manifests")
    d_norm = direction.norm()
    if d_norm == 0.0:
        return ParamVector.zeros(params.manifest)
    h = 1e-4 * max(1.0, params.norm()) / max(1e-12, d_norm)
    g_plus = grad(spec, params + h * direction, dataset)
    g_minus = grad(spec, params - h * direction, dataset)
    return (g_plus - g_minus) / (2.0 * h)


def rescale_relu(
    spec: NetworkSpec, params: ParamVector, layer_index: int, unit: int, gamma: float
) -> ParamVector:
    """Rescale one ReLU unit without changing the network function.

    Column ``unit`` and bias ``unit`` of the affine layer ``layer_index`` are
    multiplied by ``gamma``, row ``unit`` of the next affine layer is divided
    by ``gamma``. ``spec.layers[layer_index + 1]`` has to be a ReLU and
    ``spec.layers[layer_index + 2]`` an affine layer.

    Raises
    ------
    ValueError
        if ``gamma <= 0`` (a sign flip does not commute with the ReLU)
    StructureError
        if the layers around ``layer_index`` are not affine-relu-affine
    """
    if not gamma > 0:
        raise ValueError(f"gamma has to be positive, but got {gamma}")
    check_params(spec, params)
    layers = spec.layers
    if not (
        0 <= layer_index
        and layer_index + 2 < len(layers)
        and isinstance(layers[layer_index], Affine)
        and isinstance(layers[layer_index + 1], ReLU)
        and isinstance(layers[layer_index + 2], Affine)
    ):
        raise StructureError(
            f"Layer {layer_index} is not an affine layer followed by relu and affine"
        )
    if not 0 <= unit < layers[layer_index].n_out:
        raise ValueError(f"Unit {unit} out of range for layer {layer_index}")
    if gamma == 1.0:
        return params
    blocks = {name: np.array(block) for name, block in params.blocks().items()}
    blocks[f"layer{layer_index}.W"][:, unit] *= gamma
    if layers[layer_index].bias:
        blocks[f"layer{layer_index}.b"][:, unit] *= gamma
    blocks[f"layer{layer_index + 2}.W"][unit, :] /= gamma
    return ParamVector.from_segments(params.manifest, blocks)


def build_deep_linear_chain(dims: Sequence[int], bias: bool = False) -> NetworkSpec:
    """Product of linear maps with identity activations and squared error.

    Parameters
    ----------
    dims : Sequence[int]
        layer widths, input first
    bias : bool
        add biases to every affine layer, default False so that
        ``[1, 1, 1]`` is exactly the two parameter model ``y = w1 w2 x``

    Returns
    -------
    NetworkSpec
        spec with ``len(dims) - 1`` weight matrices

    Raises
    ------
    ValueError
        if fewer than 2 widths are given
    """
    if len(dims) < 2:
        raise ValueError(f"Need at least 2 layer widths, but got {list(dims)}")
    layers: List[Layer] = []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        layers.append(Affine(int(n_in), int(n_out), bias=bias))
        layers.append(Identity())
    return NetworkSpec(tuple(layers), MEAN_SQUARED_ERROR)


def min_kink_distance(spec: NetworkSpec, params: ParamVector, inputs: np.ndarray) -> float:
    """Smallest distance of any ReLU pre-activation or maxout tie to its kink.

    Returns ``inf`` for networks without piecewise-linear units.
    """
    _, cache = _forward_pass(spec, params, np.asarray(inputs, dtype=np.float64))
    distance = math.inf
    for layer, saved in zip(spec.layers, cache):
        if isinstance(layer, ReLU) and saved.size:
            distance = min(distance, float(np.min(np.abs(saved))))
        elif isinstance(layer, Maxout):
            pieces = np.sort(saved[0], axis=2)
            distance = min(distance, float(np.min(pieces[..., -1] - pieces[..., -2])))
    return distance
