"""Numeric kernels: tensors, convolutions, norms, activations and SGD."""

from .conv import ConvSpec, conv2d, conv2d_backward
from .counter import MultCounter
from .norm import NormParams, batch_norm, subspectral_norm
from .optim import SGD, sgd_step
from .tensor import (
    ConfigurationError,
    ForwardContext,
    InvariantError,
    Parameter,
    Tensor,
    float_dtype,
)

__all__ = [
    "ConfigurationError",
    "ConvSpec",
    "ForwardContext",
    "InvariantError",
    "MultCounter",
    "NormParams",
    "Parameter",
    "SGD",
    "Tensor",
    "batch_norm",
    "conv2d",
    "conv2d_backward",
    "float_dtype",
    "sgd_step",
    "subspectral_norm",
]
