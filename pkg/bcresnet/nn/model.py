"""BC-ResNet-tau: stem, four stages of BC-ResBlocks and the classification tail.

Layer map for an ``n_mels x W`` input (widths before scaling by tau)::

    stem        conv 5x5, stride (2, 1), BN, ReLU        16 channels, height / 2
    stage 1     2 blocks, dilation 1                      8
    stage 2     2 blocks, frequency stride 2, dilation 2 12
    stage 3     4 blocks, frequency stride 2, dilation 4 16
    stage 4     4 blocks, dilation 8                     20
    tail        depthwise 5x5 (no frequency padding)     20, height 1
                pointwise + ReLU                         32
                average pool over time                   32
    classifier  pointwise                                n_classes

The classifier is applied to every frame before the time average. Both are
affine, so the logits are the same as pooling first, and every layer cost
stays proportional to W.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List

import numpy as np

from ..config.settings import ModelConfig
from ..core import functional as F
from ..core.conv import ConvSpec
from ..core.tensor import ConfigurationError, FloatArray, ForwardContext, Parameter
from .block import BCResBlock, BlockConfig
from .layers import BatchNorm, Conv2d, Layer, ReLU, Sequential

logger = logging.getLogger(__name__)

STEM_WIDTH = 16
HEAD_WIDTH = 32
STEM_SPEC = ConvSpec((5, 5), stride=(2, 1), padding=(2, 2))
"""Input convolution; halves the frequency axis."""


@dataclass(frozen=True, slots=True)
class StageSpec:
    """One row group of the layer map."""

    width: int
    """Base channel count before width scaling."""
    depth: int
    """Number of BC-ResBlocks."""
    freq_stride: int
    """Frequency stride of the first block."""
    dilation: int
    """Temporal dilation of every block in the stage."""


STAGES: tuple[StageSpec, ...] = (
    StageSpec(8, 2, 1, 1),
    StageSpec(12, 2, 2, 2),
    StageSpec(16, 4, 2, 4),
    StageSpec(20, 4, 1, 8),
)


def tail_spec(channels: int) -> ConvSpec:
    """Depthwise 5x5 collapsing the last five frequency rows, time padded."""

    return ConvSpec.depthwise((5, 5), channels, padding=(0, 2))


def block_configs(cfg: ModelConfig) -> List[BlockConfig]:
    """Per-block configuration in execution order."""

    configs: List[BlockConfig] = []
    in_channels = cfg.width(STEM_WIDTH)
    for stage in STAGES:
        out_channels = cfg.width(stage.width)
        for index in range(stage.depth):
            stride = (stage.freq_stride, 1) if index == 0 else (1, 1)
            configs.append(
                BlockConfig(
                    in_channels=in_channels,
                    out_channels=out_channels,
                    stride=stride,
                    temporal_dilation=stage.dilation,
                    ssn_sub_bands=cfg.ssn_sub_bands,
                    dropout_p=cfg.dropout_p,
                    reduce_mode=cfg.reduce_mode,
                    combine_mode=cfg.combine_mode,
                    norm_mode=cfg.norm_mode,
                    use_2d_residual=cfg.use_2d_residual,
                )
            )
            in_channels = out_channels
    return configs


def stage_widths(cfg: ModelConfig) -> tuple[int, ...]:
    """Scaled widths of the four stages."""

    return tuple(cfg.width(stage.width) for stage in STAGES)


def check_layer_map(cfg: ModelConfig) -> List[int]:
    """Validate frequency heights through the network; return them per stage.

    Raises :class:`ConfigurationError` when a sub-band split does not divide
    a stage height or the tail does not reduce the frequency axis to one row.
    """

    height = STEM_SPEC.output_hw(cfg.n_mels, cfg.frames)[0]
    heights = [height]
    stage_ends = _stage_ends()
    for index, block in enumerate(block_configs(cfg)):
        height = block.output_height(height)
        if index + 1 in stage_ends:
            heights.append(height)
    tail_height = tail_spec(1).output_hw(height, cfg.frames)[0]
    if tail_height != 1:
        msg = f"Tail leaves frequency height {tail_height} for n_mels={cfg.n_mels}; expected 1"
        raise ConfigurationError(msg)
    return heights


def _stage_ends() -> List[int]:
    ends: List[int] = []
    total = 0
    for stage in STAGES:
        total += stage.depth
        ends.append(total)
    return ends


class BCResNet(Layer):
    """Keyword-spotting network built from broadcasted residual blocks."""

    def __init__(
        self,
        cfg: ModelConfig,
        rng: np.random.Generator,
        dtype: np.dtype[np.floating] = np.dtype(np.float32),
    ) -> None:
        check_layer_map(cfg)
        self.name = "bcresnet"
        self.cfg = cfg
        self.dtype = dtype
        stem_c = cfg.width(STEM_WIDTH)
        last_c = cfg.width(STAGES[-1].width)
        head_c = cfg.width(HEAD_WIDTH)
        self.stem = Sequential(
            "stem",
            [
                Conv2d("stem.conv", 1, stem_c, STEM_SPEC, rng, dtype),
                BatchNorm("stem.bn", stem_c, dtype),
                ReLU("stem.relu"),
            ],
        )
        self.blocks = [
            BCResBlock(f"blocks.{index}", block_cfg, rng, dtype)
            for index, block_cfg in enumerate(block_configs(cfg))
        ]
        self.tail_dw = Conv2d("tail.dw", last_c, last_c, tail_spec(last_c), rng, dtype)
        self.tail_pw = Sequential(
            "tail.head",
            [
                Conv2d("tail.pw", last_c, head_c, ConvSpec.pointwise(bias=True), rng, dtype),
                ReLU("tail.relu"),
            ],
        )
        self.classifier = Conv2d(
            "classifier", head_c, cfg.n_classes, ConvSpec.pointwise(bias=True), rng, dtype
        )
        self._frames = 0
        logger.debug(
            "built bcresnet tau=%s params=%d blocks=%d",
            cfg.tau,
            self.num_parameters,
            len(self.blocks),
        )

    # -- structure -----------------------------------------------------
    def layers(self) -> Iterator[Layer]:
        """Top-level layers in execution order."""

        yield self.stem
        yield from self.blocks
        yield self.tail_dw
        yield self.tail_pw
        yield self.classifier

    def parameters(self) -> List[Parameter]:
        return [param for layer in self.layers() for param in layer.parameters()]

    def buffers(self) -> Dict[str, FloatArray]:
        merged: Dict[str, FloatArray] = {}
        for layer in self.layers():
            merged.update(layer.buffers())
        return merged

    @property
    def num_parameters(self) -> int:
        """Learnable scalars actually allocated."""

        return sum(param.size for param in self.parameters())

    def flat_parameters(self) -> FloatArray:
        """All parameters concatenated in :meth:`parameters` order."""

        return np.concatenate([param.data.ravel() for param in self.parameters()])

    def zero_grad(self) -> None:
        """Clear every parameter gradient."""

        for param in self.parameters():
            param.zero_grad()

    def state_dict(self) -> Dict[str, FloatArray]:
        """Parameters and running statistics keyed by dotted name."""

        state = {param.name: param.data for param in self.parameters()}
        state.update(self.buffers())
        return state

    def load_state(self, state: Dict[str, FloatArray]) -> None:
        """Copy ``state`` into the model in place; names and shapes must match."""

        current = self.state_dict()
        missing = sorted(set(current) - set(state))
        unexpected = sorted(set(state) - set(current))
        if missing or unexpected:
            msg = f"State mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
            raise ConfigurationError(msg)
        for name, target in current.items():
            source = state[name]
            if source.shape != target.shape:
                msg = f"{name}: shape {source.shape} does not match {target.shape}"
                raise ConfigurationError(msg)
            np.copyto(target, source, casting="same_kind")

    # -- passes --------------------------------------------------------
    def _record(self, ctx: ForwardContext, row: str, x: FloatArray) -> None:
        if ctx.ledger is not None:
            ctx.ledger.append((row, int(x.shape[1]), int(x.shape[2]), int(x.shape[3])))

    def forward(self, x: FloatArray, ctx: ForwardContext) -> FloatArray:
        """Return logits ``(n, n_classes)`` for spectrograms ``(n, 1, n_mels, W)``.

        A 3-D ``(n, n_mels, W)`` batch is accepted and given the channel axis.
        """

        if x.ndim == 3:
            x = x[:, None, :, :]
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] != self.cfg.n_mels:
            msg = f"Expected input (n, 1, {self.cfg.n_mels}, W), got {x.shape}"
            raise ConfigurationError(msg)
        x = np.asarray(x, dtype=self.dtype)
        x = self.stem.forward(x, ctx)
        self._record(ctx, "stem", x)
        ends = _stage_ends()
        for index, block in enumerate(self.blocks, start=1):
            x = block.forward(x, ctx)
            if index in ends:
                self._record(ctx, f"stage{ends.index(index) + 1}", x)
        x = self.tail_dw.forward(x, ctx)
        self._record(ctx, "tail.dw", x)
        x = self.tail_pw.forward(x, ctx)
        self._record(ctx, "tail.pw", x)
        self._frames = x.shape[3]
        if ctx.ledger is not None:
            ctx.ledger.append(("avgpool", int(x.shape[1]), int(x.shape[2]), 1))
        # per frame: the affine classifier commutes with the time average
        x = self.classifier.forward(x, ctx)
        x = F.avg_pool_time(x)
        self._record(ctx, "classifier", x)
        return x[:, :, 0, 0]

    def backward(self, dy: FloatArray) -> FloatArray:
        """Backpropagate logit gradients ``(n, n_classes)``; return the input gradient."""

        grad = F.avg_pool_time_backward(dy[:, :, None, None], self._frames)
        grad = self.classifier.backward(grad)
        grad = self.tail_pw.backward(grad)
        grad = self.tail_dw.backward(grad)
        for block in reversed(self.blocks):
            grad = block.backward(grad)
        return self.stem.backward(grad)

    def predict(self, x: FloatArray) -> np.ndarray:
        """Eval-mode class indices; ties resolve to the lowest index."""

        return np.argmax(self.forward(x, ForwardContext(training=False)), axis=1)


def build(
    cfg: ModelConfig,
    rng: np.random.Generator | int = 0,
    dtype: np.dtype[np.floating] | str = "float32",
) -> BCResNet:
    """Construct BC-ResNet-tau with freshly initialised parameters."""

    generator = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return BCResNet(cfg, generator, np.dtype(dtype))


__all__ = [
    "BCResNet",
    "HEAD_WIDTH",
    "STAGES",
    "STEM_SPEC",
    "STEM_WIDTH",
    "StageSpec",
    "block_configs",
    "build",
    "check_layer_map",
    "stage_widths",
    "tail_spec",
]
