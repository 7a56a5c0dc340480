"""Broadcasted residual block (BC-ResBlock) and its transition form.

A normal block computes::

    z = f2(x)                      # 3x1 frequency-depthwise conv + SSN
    r = f1(pool_freq(z))           # temporal depthwise-separable path, height 1
    y = x + z + BC(r)              # BC repeats r over every frequency row

A transition block (channel count or stride changes) first maps ``x``
through pointwise conv -> BN -> ReLU and has no identity term.

Variants: ``reduce_mode="max"`` pools by max instead of mean,
``combine_mode="sigmoid_attention"`` uses ``z * BC(sigmoid(r))`` as the
branch, ``norm_mode="bn"`` swaps SSN for BN and ``use_2d_residual=False``
drops the auxiliary ``z`` term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Literal

import numpy as np

from ..core import functional as F
from ..core.conv import ConvSpec
from ..core.tensor import (
    ConfigurationError,
    FloatArray,
    ForwardContext,
    InvariantError,
    Parameter,
)
from .layers import (
    BatchNorm,
    ChannelDropout,
    Conv2d,
    FreqPool,
    Layer,
    ReduceMode,
    ReLU,
    Sequential,
    SubSpectralNorm,
    Swish,
)

CombineMode = Literal["broadcast_add", "sigmoid_attention"]
NormMode = Literal["ssn", "bn"]


@dataclass(frozen=True, slots=True)
class BlockConfig:
    """Hyperparameters of one BC-ResBlock."""

    in_channels: int
    """Channels entering the block."""
    out_channels: int
    """Channels leaving the block."""
    stride: tuple[int, int] = (1, 1)
    """(frequency, time) stride; only the frequency component may exceed 1."""
    temporal_dilation: int = 1
    """Dilation of the 1x3 temporal depthwise conv in f1."""
    ssn_sub_bands: int = 5
    """Number of SubSpectral Normalization bands in f2."""
    dropout_p: float = 0.1
    """Channel dropout rate at the end of f1."""
    reduce_mode: ReduceMode = "avg"
    """Frequency reduction before f1."""
    combine_mode: CombineMode = "broadcast_add"
    """How the temporal branch is merged back into the 2-D features."""
    norm_mode: NormMode = "ssn"
    """Normalization after the frequency-depthwise conv."""
    use_2d_residual: bool = True
    """Add the auxiliary 2-D term ``f2(x)`` to the output."""

    def __post_init__(self) -> None:
        if self.in_channels < 1 or self.out_channels < 1:
            msg = f"Channel counts must be positive, got {self.in_channels}->{self.out_channels}"
            raise ConfigurationError(msg)
        if self.stride[1] != 1 or self.stride[0] < 1:
            msg = f"Only frequency striding is supported, got stride {self.stride}"
            raise ConfigurationError(msg)
        if self.temporal_dilation < 1:
            msg = f"Temporal dilation must be >= 1, got {self.temporal_dilation}"
            raise ConfigurationError(msg)
        if not 0.0 <= self.dropout_p < 1.0:
            msg = f"Dropout rate must lie in [0, 1), got {self.dropout_p}"
            raise ConfigurationError(msg)

    @property
    def is_transition(self) -> bool:
        """True when the block changes width or strides."""

        return self.in_channels != self.out_channels or self.stride != (1, 1)

    @property
    def norm_bands(self) -> int:
        """Sub-bands actually used by the f2 norm (1 for plain BN)."""

        return self.ssn_sub_bands if self.norm_mode == "ssn" else 1

    def output_height(self, height: int) -> int:
        """Frequency height after the block for an input of ``height`` rows."""

        out = self.f2_spec().output_hw(height, 1)[0]
        if out % self.norm_bands:
            msg = (
                f"Post-stride frequency height {out} is not divisible by "
                f"{self.norm_bands} sub-bands"
            )
            raise ConfigurationError(msg)
        return out

    def f2_spec(self) -> ConvSpec:
        """3x1 frequency-depthwise conv carrying the frequency stride."""

        return ConvSpec.depthwise(
            (3, 1), self.out_channels, stride=(self.stride[0], 1), padding=(1, 0)
        )

    def f1_spec(self) -> ConvSpec:
        """1x3 temporal depthwise conv, dilated and padded to keep the length."""

        d = self.temporal_dilation
        return ConvSpec.depthwise((1, 3), self.out_channels, dilation=(1, d), padding=(0, d))


class BCResBlock(Layer):
    """Normal or transition BC-ResBlock with an explicit backward pass."""

    def __init__(
        self,
        name: str,
        cfg: BlockConfig,
        rng: np.random.Generator,
        dtype: np.dtype[np.floating] = np.dtype(np.float32),
    ) -> None:
        self.name = name
        self.cfg = cfg
        c = cfg.out_channels
        self.front: Sequential | None = None
        if cfg.is_transition:
            self.front = Sequential(
                f"{name}.front",
                [
                    Conv2d(
                        f"{name}.front.pw", cfg.in_channels, c, ConvSpec.pointwise(), rng, dtype
                    ),
                    BatchNorm(f"{name}.front.bn", c, dtype),
                    ReLU(f"{name}.front.relu"),
                ],
            )
        norm: Layer
        if cfg.norm_mode == "ssn":
            norm = SubSpectralNorm(f"{name}.f2.ssn", c, cfg.ssn_sub_bands, dtype)
        else:
            norm = BatchNorm(f"{name}.f2.bn", c, dtype)
        self.f2 = Sequential(
            f"{name}.f2", [Conv2d(f"{name}.f2.dw", c, c, cfg.f2_spec(), rng, dtype), norm]
        )
        self.pool = FreqPool(f"{name}.pool", cfg.reduce_mode)
        self.f1 = Sequential(
            f"{name}.f1",
            [
                Conv2d(f"{name}.f1.dw", c, c, cfg.f1_spec(), rng, dtype),
                BatchNorm(f"{name}.f1.bn", c, dtype),
                Swish(f"{name}.f1.swish"),
                Conv2d(f"{name}.f1.pw", c, c, ConvSpec.pointwise(), rng, dtype),
                ChannelDropout(f"{name}.f1.dropout", cfg.dropout_p),
            ],
        )
        self._x_shape: tuple[int, ...] | None = None
        self._z: FloatArray | None = None
        self._attention: FloatArray | None = None
        self._attention_row: FloatArray | None = None

    def _parts(self) -> List[Layer]:
        parts: List[Layer] = [self.f2, self.f1]
        return parts if self.front is None else [self.front, *parts]

    def parameters(self) -> List[Parameter]:
        return [param for part in self._parts() for param in part.parameters()]

    def buffers(self) -> Dict[str, FloatArray]:
        merged: Dict[str, FloatArray] = {}
        for part in self._parts():
            merged.update(part.buffers())
        return merged

    # -- branches ------------------------------------------------------
    def f2_forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        """Frequency-depthwise conv (strided) followed by SSN."""

        if x.shape[1] != self.cfg.out_channels:
            msg = f"{self.name}: f2 expects {self.cfg.out_channels} channels, got {x.shape[1]}"
            raise ConfigurationError(msg)
        self.cfg.output_height(x.shape[2])
        return self.f2.forward(x, ctx)

    def f1_forward(self, t: FloatArray, ctx: ForwardContext) -> FloatArray:
        """Temporal depthwise conv, BN, swish, pointwise conv and channel dropout."""

        if t.shape[2] != 1:
            msg = f"{self.name}: f1 expects frequency height 1, got {t.shape[2]}"
            raise ConfigurationError(msg)
        return self.f1.forward(t, ctx)

    # -- block ---------------------------------------------------------
    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        cfg = self.cfg
        self._x_shape = x.shape
        inner = x if self.front is None else self.front.forward(x, ctx)
        z = self.f2_forward(inner, ctx)
        r = self.f1_forward(self.pool.forward(z, ctx), ctx)
        height = z.shape[2]
        self._z = z
        if cfg.combine_mode == "broadcast_add":
            out = F.broadcast_freq(r, height)
            if cfg.use_2d_residual:
                out = out + z
        else:
            self._attention_row = F.sigmoid(r)
            self._attention = F.broadcast_freq(self._attention_row, height)
            out = z * self._attention
            if ctx.counter is not None:
                ctx.counter.add(f"{self.name}.attention", int(out.size))
        if self.front is None:
            if out.shape != x.shape:
                msg = f"{self.name}: residual shape {out.shape} differs from identity {x.shape}"
                raise InvariantError(msg)
            out = out + x
        return out

    def backward(self, dy: FloatArray) -> FloatArray:
        z = self._cached(self._z)
        if self.cfg.combine_mode == "broadcast_add":
            dz = dy.copy() if self.cfg.use_2d_residual else np.zeros_like(z)
            dr = F.broadcast_freq_backward(dy)
        else:
            attention = self._cached(self._attention)
            dz = dy * attention
            da = F.broadcast_freq_backward(dy * z)
            dr = F.sigmoid_backward(da, self._cached(self._attention_row))
        dpooled = self.f1.backward(dr)
        dz += self.pool.backward(dpooled)
        dinner = self.f2.backward(dz)
        if self.front is None:
            return dinner + dy
        return self.front.backward(dinner)


__all__ = ["BCResBlock", "BlockConfig", "CombineMode", "NormMode"]
