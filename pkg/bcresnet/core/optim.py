"""Stochastic gradient descent with classic (coupled) momentum and weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

import numpy as np

from .tensor import FloatArray, Parameter


def sgd_step(
    param: FloatArray,
    grad: FloatArray,
    velocity: FloatArray,
    lr: float,
    momentum: float = 0.9,
    weight_decay: float = 0.001,
) -> None:
    """Update ``param`` and ``velocity`` in place.

    ``v <- momentum * v + (grad + weight_decay * param)`` then
    ``param <- param - lr * v``.
    """

    velocity *= momentum
    velocity += grad
    if weight_decay:
        velocity += weight_decay * param
    param -= lr * velocity


@dataclass
class SGD:
    """Optimizer owning one momentum buffer per parameter.

    Weight decay is only applied to parameters flagged with ``decay``
    (convolution weights); norm affines and biases are left undecayed.
    """

    params: List[Parameter]
    """Parameters updated by :meth:`step`."""
    momentum: float = 0.9
    """Momentum coefficient."""
    weight_decay: float = 0.001
    """L2 coefficient folded into the momentum buffer."""
    velocity: Dict[str, FloatArray] = field(default_factory=dict)
    """Momentum buffers keyed by parameter name."""

    def __post_init__(self) -> None:
        for param in self.params:
            self.velocity.setdefault(param.name, np.zeros_like(param.data))

    @classmethod
    def create(
        cls,
        params: Iterable[Parameter],
        *,
        momentum: float = 0.9,
        weight_decay: float = 0.001,
    ) -> "SGD":
        """Create an optimizer over ``params`` with zeroed buffers."""

        return cls(list(params), momentum=momentum, weight_decay=weight_decay)

    def zero_grad(self) -> None:
        """Clear every parameter gradient."""

        for param in self.params:
            param.zero_grad()

    def step(self, lr: float) -> None:
        """Apply one update at learning rate ``lr``."""

        for param in self.params:
            sgd_step(
                param.data,
                param.grad,
                self.velocity[param.name],
                lr,
                momentum=self.momentum,
                weight_decay=self.weight_decay if param.decay else 0.0,
            )


__all__ = ["SGD", "sgd_step"]
