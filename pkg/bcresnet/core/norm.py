"""Batch normalization and SubSpectral normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .counter import MultCounter
from .tensor import ConfigurationError, FloatArray, Parameter

DEFAULT_EPS = 1e-5
DEFAULT_MOMENTUM = 0.1


@dataclass(slots=True)
class NormParams:
    """Affine parameters and running statistics of one norm layer."""

    gamma: Parameter
    """Per-channel (per channel and sub-band for SSN) scale."""
    beta: Parameter
    """Per-channel shift, same layout as :attr:`gamma`."""
    running_mean: FloatArray
    """Exponential moving average of batch means."""
    running_var: FloatArray
    """Exponential moving average of unbiased batch variances."""
    sub_bands: int = 1
    """Number of frequency sub-bands sharing no statistics (1 for plain BN)."""
    eps: float = DEFAULT_EPS
    """Added to the variance before the square root."""
    momentum: float = DEFAULT_MOMENTUM
    """Weight of the newest batch in the running statistics."""

    @classmethod
    def create(
        cls,
        name: str,
        channels: int,
        *,
        sub_bands: int = 1,
        dtype: np.dtype[np.floating] = np.dtype(np.float32),
    ) -> "NormParams":
        """Return unit-scale, zero-shift params with mean 0 / var 1 statistics."""

        size = channels * sub_bands
        return cls(
            gamma=Parameter(f"{name}.gamma", np.ones(size, dtype=dtype)),
            beta=Parameter(f"{name}.beta", np.zeros(size, dtype=dtype)),
            running_mean=np.zeros(size, dtype=dtype),
            running_var=np.ones(size, dtype=dtype),
            sub_bands=sub_bands,
        )

    @property
    def size(self) -> int:
        """Number of normalized groups (``channels * sub_bands``)."""

        return int(self.gamma.data.size)

    def parameters(self) -> list[Parameter]:
        """Return the learnable affine parameters."""

        return [self.gamma, self.beta]


@dataclass(slots=True)
class NormCache:
    """Values saved by the forward pass for the backward pass."""

    xhat: FloatArray
    inv_std: FloatArray
    gamma: FloatArray
    training: bool
    sub_bands: int = 1


def _channels_first(x: FloatArray) -> FloatArray:
    # contiguous (c, n*h*w) copy so statistics reduce in a layout-independent order
    return np.ascontiguousarray(x.transpose(1, 0, 2, 3)).reshape(x.shape[1], -1)


def _bcast(v: FloatArray) -> FloatArray:
    return v[None, :, None, None]


def batch_norm(
    x: FloatArray,
    p: NormParams,
    training: bool,
    *,
    counter: MultCounter | None = None,
    label: str = "batch_norm",
) -> tuple[FloatArray, NormCache]:
    """Normalize ``x`` per channel over (n, h, w) and apply the affine."""

    channels = x.shape[1]
    if channels != p.size:
        msg = f"batch_norm got {channels} channels but params hold {p.size}"
        raise ConfigurationError(msg)
    if training:
        flat = _channels_first(x)
        mean = flat.mean(axis=1)
        var = flat.var(axis=1)
        m = flat.shape[1]
        unbiased = var * (m / (m - 1)) if m > 1 else var
        p.running_mean[...] = (1.0 - p.momentum) * p.running_mean + p.momentum * mean
        p.running_var[...] = (1.0 - p.momentum) * p.running_var + p.momentum * unbiased
    else:
        mean = p.running_mean
        var = p.running_var
    inv_std = (1.0 / np.sqrt(var + p.eps)).astype(x.dtype)
    xhat = (x - _bcast(mean.astype(x.dtype))) * _bcast(inv_std)
    gamma = p.gamma.data
    y = xhat * _bcast(gamma) + _bcast(p.beta.data)
    if counter is not None:
        counter.add(label, int(x.size))
    return y, NormCache(xhat=xhat, inv_std=inv_std, gamma=gamma, training=training)


def batch_norm_backward(
    dy: FloatArray, cache: NormCache
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Return ``(dx, dgamma, dbeta)`` for :func:`batch_norm`."""

    dgamma = np.einsum("nchw,nchw->c", dy, cache.xhat)
    dbeta = dy.sum(axis=(0, 2, 3))
    dxhat = dy * _bcast(cache.gamma)
    if not cache.training:
        return dxhat * _bcast(cache.inv_std), dgamma, dbeta
    m = dy.shape[0] * dy.shape[2] * dy.shape[3]
    sum_dxhat = dxhat.sum(axis=(0, 2, 3))
    sum_dxhat_xhat = np.einsum("nchw,nchw->c", dxhat, cache.xhat)
    dx = (
        _bcast(cache.inv_std / m)
        * (m * dxhat - _bcast(sum_dxhat) - cache.xhat * _bcast(sum_dxhat_xhat))
    )
    return dx, dgamma, dbeta


def _band_view(x: FloatArray, sub_bands: int) -> FloatArray:
    n, c, h, w = x.shape
    if sub_bands < 1 or h % sub_bands:
        msg = f"Frequency height {h} is not divisible into {sub_bands} sub-bands"
        raise ConfigurationError(msg)
    # channel-major, band-minor: group index is c * S + s
    return x.reshape(n, c * sub_bands, h // sub_bands, w)


def subspectral_norm(
    x: FloatArray,
    p: NormParams,
    sub_bands: int,
    training: bool,
    *,
    counter: MultCounter | None = None,
    label: str = "subspectral_norm",
) -> tuple[FloatArray, NormCache]:
    """Batch-normalize each of ``sub_bands`` equal frequency bands separately.

    Band ``s`` of channel ``c`` uses affine entry and running statistics at
    index ``c * sub_bands + s``. With ``sub_bands == 1`` this is exactly
    :func:`batch_norm`.
    """

    bands = _band_view(x, sub_bands)
    y, cache = batch_norm(bands, p, training, counter=counter, label=label)
    cache.sub_bands = sub_bands
    return y.reshape(x.shape), cache


def subspectral_norm_backward(
    dy: FloatArray, cache: NormCache
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Return ``(dx, dgamma, dbeta)`` for :func:`subspectral_norm`."""

    bands = _band_view(dy, cache.sub_bands)
    dx, dgamma, dbeta = batch_norm_backward(bands, cache)
    return dx.reshape(dy.shape), dgamma, dbeta


__all__ = [
    "DEFAULT_EPS",
    "DEFAULT_MOMENTUM",
    "NormCache",
    "NormParams",
    "batch_norm",
    "batch_norm_backward",
    "subspectral_norm",
    "subspectral_norm_backward",
]
