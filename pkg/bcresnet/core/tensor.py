"""Tensor containers, learnable parameters and the forward context."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np
from numpy.typing import NDArray

if TYPE_CHECKING:  # pragma: no cover - import only for typing
    from .counter import MultCounter

FloatArray = NDArray[np.floating]
"""Dense floating point array; 32-bit for training, 64-bit for gradient checks."""

Precision = Literal["float32", "float64"]


class ConfigurationError(ValueError):
    """Raised when shapes, groups or hyperparameters are inconsistent."""


class InvariantError(RuntimeError):
    """Raised when an internal invariant is violated."""


def float_dtype(precision: Precision) -> np.dtype[np.floating]:
    """Return the numpy dtype for ``precision``."""

    return np.dtype(np.float64 if precision == "float64" else np.float32)


@dataclass(slots=True)
class Tensor:
    """Dense batch x channel x frequency x time array with a gradient slot."""

    data: FloatArray
    """Values laid out row-major as ``(n, c, h, w)``."""
    grad: FloatArray | None = None
    """Gradient buffer with the same shape as :attr:`data`."""

    def __post_init__(self) -> None:
        if self.data.ndim != 4:
            msg = f"Tensor data must be 4-D (n, c, h, w), got shape {self.data.shape}"
            raise ConfigurationError(msg)
        if self.grad is not None and self.grad.shape != self.data.shape:
            msg = f"Gradient shape {self.grad.shape} differs from data {self.data.shape}"
            raise ConfigurationError(msg)

    @classmethod
    def zeros(cls, shape: tuple[int, int, int, int], precision: Precision = "float32") -> "Tensor":
        """Return a zero tensor of ``shape``."""

        return cls(np.zeros(shape, dtype=float_dtype(precision)))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """Return ``(n, c, h, w)``."""

        n, c, h, w = self.data.shape
        return n, c, h, w

    def zero_grad(self) -> None:
        """Reset the gradient buffer to zeros."""

        self.grad = np.zeros_like(self.data)


@dataclass(slots=True)
class Parameter:
    """A learnable array together with its gradient and optimizer hints."""

    name: str
    """Dotted path identifying the parameter inside a model."""
    data: FloatArray
    """Current value."""
    grad: FloatArray = field(init=False)
    """Accumulated gradient, same shape as :attr:`data`."""
    decay: bool = False
    """Whether weight decay applies (convolution weights only)."""

    def __post_init__(self) -> None:
        self.grad = np.zeros_like(self.data)

    @property
    def size(self) -> int:
        """Number of learnable scalars."""

        return int(self.data.size)

    def zero_grad(self) -> None:
        """Reset the gradient buffer."""

        self.grad.fill(0.0)


@dataclass(slots=True)
class ForwardContext:
    """Explicit per-call state threaded through every layer."""

    training: bool = False
    """Use batch statistics and dropout when true."""
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    """Seeded stream for dropout masks."""
    counter: MultCounter | None = None
    """Optional multiply counter incremented inside conv and norm kernels."""
    kinks: list[NDArray[np.generic]] | None = None
    """When set, ReLU masks and max-pool indices are appended for kink detection."""
    ledger: list[tuple[str, int, int, int]] | None = None
    """When set, the model appends ``(row, channels, height, width)`` per layer row."""

    def record_kink(self, pattern: NDArray[np.generic]) -> None:
        """Store a non-differentiable branch pattern if tracing is on."""

        if self.kinks is not None:
            self.kinks.append(pattern.copy())


__all__ = [
    "ConfigurationError",
    "FloatArray",
    "ForwardContext",
    "InvariantError",
    "Parameter",
    "Precision",
    "Tensor",
    "float_dtype",
]
