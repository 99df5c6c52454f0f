"""Network architectures, parameter vectors, objectives and their derivatives."""
from landscape_probe.model.network import (
    MEAN_SQUARED_ERROR,
    SOFTMAX_CROSS_ENTROPY,
    Affine,
    Batch,
    ForwardResult,
    Identity,
    LossTotal,
    Maxout,
    NetworkSpec,
    ReLU,
    Sigmoid,
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
from landscape_probe.model.params import ParamVector, Segment

__all__ = [
    "MEAN_SQUARED_ERROR",
    "SOFTMAX_CROSS_ENTROPY",
    "Affine",
    "Batch",
    "ForwardResult",
    "Identity",
    "LossTotal",
    "Maxout",
    "NetworkSpec",
    "ParamVector",
    "ReLU",
    "Segment",
    "Sigmoid",
    "build_deep_linear_chain",
    "combine_totals",
    "forward",
    "grad",
    "hvp",
    "loss_and_grad",
    "loss_total",
    "min_kink_distance",
    "rescale_relu",
]
