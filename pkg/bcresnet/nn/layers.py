"""Stateful layer wrappers around the functional kernels.

A layer caches whatever its forward pass needs and accumulates parameter
gradients in :meth:`backward`. Layers run strictly forward-then-backward;
a second forward overwrites the cache.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Dict, List, Literal, Sequence

import numpy as np

from ..core import functional as F
from ..core.conv import ConvSpec, conv2d, conv2d_backward
from ..core.norm import (
    NormCache,
    NormParams,
    batch_norm,
    batch_norm_backward,
    subspectral_norm,
    subspectral_norm_backward,
)
from ..core.tensor import (
    ConfigurationError,
    FloatArray,
    ForwardContext,
    InvariantError,
    Parameter,
)

ReduceMode = Literal["avg", "max"]


class Layer(ABC):
    """Base class for layers with an explicit backward pass."""

    name: str

    def parameters(self) -> List[Parameter]:
        """Learnable parameters owned by this layer."""

        return []

    def buffers(self) -> Dict[str, FloatArray]:
        """Non-learnable state persisted in checkpoints (running statistics)."""

        return {}

    @abstractmethod
    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        """Compute the output and cache what backward needs."""

    @abstractmethod
    def backward(self, dy: FloatArray) -> FloatArray:
        """Accumulate parameter gradients and return the input gradient."""

    def __call__(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        return self.forward(x, ctx)

    def _cached(self, value: FloatArray | None) -> FloatArray:
        if value is None:
            msg = f"{self.name}: backward called before forward"
            raise InvariantError(msg)
        return value


class Conv2d(Layer):
    """Convolution with fan-in scaled uniform initialisation."""

    def __init__(
        self,
        name: str,
        in_channels: int,
        out_channels: int,
        spec: ConvSpec,
        rng: np.random.Generator,
        dtype: np.dtype[np.floating],
    ) -> None:
        self.name = name
        self.spec = spec
        self.in_channels = in_channels
        self.out_channels = out_channels
        shape = spec.weight_shape(in_channels, out_channels)
        fan_in = shape[1] * shape[2] * shape[3]
        bound = 1.0 / math.sqrt(fan_in)
        self.weight = Parameter(
            f"{name}.weight",
            rng.uniform(-bound, bound, size=shape).astype(dtype),
            decay=True,
        )
        self.bias: Parameter | None = None
        if spec.bias:
            self.bias = Parameter(
                f"{name}.bias", rng.uniform(-bound, bound, size=out_channels).astype(dtype)
            )
        self._x: FloatArray | None = None

    def parameters(self) -> List[Parameter]:
        return [self.weight] if self.bias is None else [self.weight, self.bias]

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        self._x = x
        bias = None if self.bias is None else self.bias.data
        return conv2d(x, self.weight.data, self.spec, bias, counter=ctx.counter, label=self.name)

    def backward(self, dy: FloatArray) -> FloatArray:
        dx, dweight, dbias = conv2d_backward(dy, self._cached(self._x), self.weight.data, self.spec)
        self.weight.grad += dweight
        if self.bias is not None and dbias is not None:
            self.bias.grad += dbias
        return dx


class _Norm(Layer):
    def __init__(self, name: str, params: NormParams) -> None:
        self.name = name
        self.params = params
        self._cache: NormCache | None = None

    def parameters(self) -> List[Parameter]:
        return self.params.parameters()

    def buffers(self) -> Dict[str, FloatArray]:
        return {
            f"{self.name}.running_mean": self.params.running_mean,
            f"{self.name}.running_var": self.params.running_var,
        }

    def _norm_cache(self) -> NormCache:
        if self._cache is None:
            msg = f"{self.name}: backward called before forward"
            raise InvariantError(msg)
        return self._cache

    def _accumulate(self, dgamma: FloatArray, dbeta: FloatArray) -> None:
        self.params.gamma.grad += dgamma
        self.params.beta.grad += dbeta


class BatchNorm(_Norm):
    """Per-channel batch normalization."""

    def __init__(self, name: str, channels: int, dtype: np.dtype[np.floating]) -> None:
        super().__init__(name, NormParams.create(name, channels, dtype=dtype))

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        y, self._cache = batch_norm(
            x, self.params, ctx.training, counter=ctx.counter, label=self.name
        )
        return y

    def backward(self, dy: FloatArray) -> FloatArray:
        dx, dgamma, dbeta = batch_norm_backward(dy, self._norm_cache())
        self._accumulate(dgamma, dbeta)
        return dx


class SubSpectralNorm(_Norm):
    """Batch normalization applied separately to equal frequency sub-bands."""

    def __init__(
        self, name: str, channels: int, sub_bands: int, dtype: np.dtype[np.floating]
    ) -> None:
        super().__init__(name, NormParams.create(name, channels, sub_bands=sub_bands, dtype=dtype))
        self.sub_bands = sub_bands

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        y, self._cache = subspectral_norm(
            x, self.params, self.sub_bands, ctx.training, counter=ctx.counter, label=self.name
        )
        return y

    def backward(self, dy: FloatArray) -> FloatArray:
        dx, dgamma, dbeta = subspectral_norm_backward(dy, self._norm_cache())
        self._accumulate(dgamma, dbeta)
        return dx


class Swish(Layer):
    """``x * sigmoid(x)``."""

    def __init__(self, name: str = "swish") -> None:
        self.name = name
        self._x: FloatArray | None = None

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        self._x = x
        return F.swish(x)

    def backward(self, dy: FloatArray) -> FloatArray:
        return F.swish_backward(dy, self._cached(self._x))


class ReLU(Layer):
    """Rectifier; its sign pattern is traced for kink detection."""

    def __init__(self, name: str = "relu") -> None:
        self.name = name
        self._x: FloatArray | None = None

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        self._x = x
        ctx.record_kink(x > 0)
        return F.relu(x)

    def backward(self, dy: FloatArray) -> FloatArray:
        return F.relu_backward(dy, self._cached(self._x))


class ChannelDropout(Layer):
    """Drops whole channels of each sample during training."""

    def __init__(self, name: str, p: float) -> None:
        if not 0.0 <= p < 1.0:
            msg = f"Dropout rate must lie in [0, 1), got {p}"
            raise ConfigurationError(msg)
        self.name = name
        self.p = p
        self._mask: FloatArray | None = None

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        y, self._mask = F.channel_dropout(x, self.p, ctx.rng, ctx.training)
        return y

    def backward(self, dy: FloatArray) -> FloatArray:
        return F.channel_dropout_backward(dy, self._mask)


class FreqPool(Layer):
    """Reduces the frequency axis to one row by mean or max."""

    def __init__(self, name: str, mode: ReduceMode = "avg") -> None:
        if mode not in ("avg", "max"):
            msg = f"Unknown frequency reduction {mode!r}"
            raise ConfigurationError(msg)
        self.name = name
        self.mode = mode
        self._height = 0
        self._index: np.ndarray | None = None

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        self._height = x.shape[2]
        if self.mode == "avg":
            return F.avg_pool_freq(x)
        y, self._index = F.max_pool_freq(x)
        ctx.record_kink(self._index)
        return y

    def backward(self, dy: FloatArray) -> FloatArray:
        if self.mode == "avg":
            return F.avg_pool_freq_backward(dy, self._height)
        if self._index is None:
            msg = f"{self.name}: backward called before forward"
            raise InvariantError(msg)
        return F.max_pool_freq_backward(dy, self._index, self._height)


class Sequential(Layer):
    """Chains layers; backward runs them in reverse."""

    def __init__(self, name: str, layers: Sequence[Layer]) -> None:
        self.name = name
        self.layers = list(layers)

    def parameters(self) -> List[Parameter]:
        return [param for layer in self.layers for param in layer.parameters()]

    def buffers(self) -> Dict[str, FloatArray]:
        merged: Dict[str, FloatArray] = {}
        for layer in self.layers:
            merged.update(layer.buffers())
        return merged

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        for layer in self.layers:
            x = layer.forward(x, ctx)
        return x

    def backward(self, dy: FloatArray) -> FloatArray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy


__all__ = [
    "BatchNorm",
    "ChannelDropout",
    "Conv2d",
    "FreqPool",
    "Layer",
    "ReLU",
    "ReduceMode",
    "Sequential",
    "SubSpectralNorm",
    "Swish",
]
