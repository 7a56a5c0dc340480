"""Elementwise activations, frequency pooling, broadcasting and dropout.

Every forward function has a ``*_backward`` partner taking the upstream
gradient and whatever the forward needs to be replayed.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from .tensor import ConfigurationError, FloatArray

IndexArray = NDArray[np.intp]


def sigmoid(x: FloatArray) -> FloatArray:
    """Numerically stable logistic function."""

    return expit(x)


def sigmoid_backward(dy: FloatArray, y: FloatArray) -> FloatArray:
    """Gradient of :func:`sigmoid` given its output ``y``."""

    return dy * y * (1.0 - y)


def swish(x: FloatArray) -> FloatArray:
    """``x * sigmoid(x)``."""

    return x * expit(x)


def swish_backward(dy: FloatArray, x: FloatArray) -> FloatArray:
    """Gradient of :func:`swish` at ``x``."""

    s = expit(x)
    return dy * (s + x * s * (1.0 - s))


def relu(x: FloatArray) -> FloatArray:
    """``max(x, 0)``."""

    return np.maximum(x, 0.0)


def relu_backward(dy: FloatArray, x: FloatArray) -> FloatArray:
    """Gradient of :func:`relu`; zero at and below the kink."""

    return dy * (x > 0)


def avg_pool_freq(x: FloatArray) -> FloatArray:
    """Mean over the frequency axis, keeping it as a singleton."""

    return x.mean(axis=2, keepdims=True)


def avg_pool_freq_backward(dy: FloatArray, height: int) -> FloatArray:
    """Spread ``dy`` (n, c, 1, w) evenly over ``height`` rows."""

    return np.repeat(dy / height, height, axis=2)


def max_pool_freq(x: FloatArray) -> tuple[FloatArray, IndexArray]:
    """Max over the frequency axis; also returns the winning row per column."""

    index = np.argmax(x, axis=2)[:, :, None, :]
    return np.take_along_axis(x, index, axis=2), index


def max_pool_freq_backward(dy: FloatArray, index: IndexArray, height: int) -> FloatArray:
    """Route ``dy`` back to the rows selected by :func:`max_pool_freq`."""

    n, c, _, w = dy.shape
    dx = np.zeros((n, c, height, w), dtype=dy.dtype)
    np.put_along_axis(dx, index, dy, axis=2)
    return dx


def avg_pool_time(x: FloatArray) -> FloatArray:
    """Mean over the time axis, keeping it as a singleton."""

    return x.mean(axis=3, keepdims=True)


def avg_pool_time_backward(dy: FloatArray, width: int) -> FloatArray:
    """Spread ``dy`` (n, c, h, 1) evenly over ``width`` frames."""

    return np.repeat(dy / width, width, axis=3)


def broadcast_freq(x: FloatArray, target_h: int) -> FloatArray:
    """Expand a single-row (n, c, 1, w) feature to ``target_h`` identical rows."""

    if x.shape[2] != 1:
        msg = f"broadcast_freq expects frequency height 1, got {x.shape[2]}"
        raise ConfigurationError(msg)
    return np.repeat(x, target_h, axis=2)


def broadcast_freq_backward(dy: FloatArray) -> FloatArray:
    """Sum gradients of every copy back into the single row."""

    return dy.sum(axis=2, keepdims=True)


def channel_dropout(
    x: FloatArray,
    p: float,
    rng: np.random.Generator,
    training: bool,
) -> tuple[FloatArray, FloatArray | None]:
    """Zero whole (sample, channel) planes with probability ``p``.

    Survivors are scaled by ``1 / (1 - p)``. Returns the output and the
    scaled keep-mask (``None`` when the call is the identity).
    """

    if not 0.0 <= p < 1.0:
        msg = f"Dropout rate must lie in [0, 1), got {p}"
        raise ConfigurationError(msg)
    if not training or p == 0.0:
        return x, None
    n, c = x.shape[:2]
    keep = rng.random((n, c)) >= p
    mask = (keep / (1.0 - p)).astype(x.dtype)[:, :, None, None]
    return x * mask, mask


def channel_dropout_backward(dy: FloatArray, mask: FloatArray | None) -> FloatArray:
    """Gradient of :func:`channel_dropout` given its mask."""

    return dy if mask is None else dy * mask


__all__ = [
    "avg_pool_freq",
    "avg_pool_freq_backward",
    "avg_pool_time",
    "avg_pool_time_backward",
    "broadcast_freq",
    "broadcast_freq_backward",
    "channel_dropout",
    "channel_dropout_backward",
    "max_pool_freq",
    "max_pool_freq_backward",
    "relu",
    "relu_backward",
    "sigmoid",
    "sigmoid_backward",
    "swish",
    "swish_backward",
]
