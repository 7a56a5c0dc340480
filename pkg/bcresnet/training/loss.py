"""Softmax cross-entropy."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy.special import log_softmax

from ..core.tensor import ConfigurationError, FloatArray


def cross_entropy(
    logits: FloatArray, labels: NDArray[np.integer]
) -> tuple[float, FloatArray]:
    """Mean negative log-likelihood and its gradient ``(softmax - onehot) / n``."""

    n, classes = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        msg = f"Expected {n} labels, got shape {labels.shape}"
        raise ConfigurationError(msg)
    if n == 0 or labels.min() < 0 or labels.max() >= classes:
        msg = f"Labels must lie in [0, {classes}), got {labels.tolist()}"
        raise ConfigurationError(msg)
    log_probs = log_softmax(logits.astype(np.float64), axis=1)
    rows = np.arange(n)
    loss = float(-log_probs[rows, labels].mean())
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype)


def accuracy(logits: FloatArray, labels: NDArray[np.integer]) -> float:
    """Top-1 accuracy; ties resolve to the lowest class index."""

    if len(labels) == 0:
        return 0.0
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(labels)))


__all__ = ["accuracy", "cross_entropy"]
