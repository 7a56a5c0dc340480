"""Analytic parameter and multiply counts for BC-ResNet-tau.

Counting convention:

* a convolution costs ``output elements x kernel taps x input channels per group``;
* a batch or sub-spectral norm costs one multiply per output element;
* the attention variant costs one multiply per gated element;
* activations, additions, pooling and dropout cost nothing;
* the classifier runs on every frame ahead of the time average, so each row
  is proportional to ``W``.

The layer labels match the ones the runtime :class:`~bcresnet.core.MultCounter`
records, so the analytic ledger can be compared row by row with an
instrumented forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from ..config.settings import ModelConfig
from ..core.conv import ConvSpec
from .model import HEAD_WIDTH, STAGES, STEM_SPEC, STEM_WIDTH, block_configs, tail_spec

CONVENTION = (
    "conv = out_elements * taps * in_per_group; norm = 1 per element; "
    "activations, adds, pooling = 0"
)


@dataclass(slots=True)
class LayerCost:
    """Cost of one labelled layer."""

    name: str
    """Label shared with the runtime counter."""
    kind: str
    """``conv``, ``norm`` or ``attention``."""
    params: int
    """Learnable scalars."""
    mults: int
    """Multiplies for one utterance."""
    out_shape: tuple[int, int, int]
    """Output ``(channels, height, width)``."""


@dataclass(slots=True)
class CostReport:
    """Totals and per-layer breakdown of a model configuration."""

    tau: float
    """Width multiplier the report was computed for."""
    frames: int
    """Input width ``W`` used for the multiply count."""
    layers: List[LayerCost] = field(default_factory=list)
    """Breakdown in execution order."""

    @property
    def params(self) -> int:
        """Exact learnable-scalar count."""

        return sum(layer.params for layer in self.layers)

    @property
    def mults(self) -> int:
        """Exact multiplies for one forward pass."""

        return sum(layer.mults for layer in self.layers)

    def by_name(self) -> dict[str, int]:
        """Multiplies keyed by layer label."""

        return {layer.name: layer.mults for layer in self.layers}

    def table(self) -> str:
        """Human readable per-layer table followed by the totals line."""

        lines = [
            f"# BC-ResNet-{self.tau:g} at W={self.frames}; {CONVENTION}",
            f"{'layer':<24} {'kind':<9} {'output':>14} {'params':>9} {'mults':>12}",
        ]
        for layer in self.layers:
            shape = "x".join(str(v) for v in layer.out_shape)
            lines.append(
                f"{layer.name:<24} {layer.kind:<9} {shape:>14} {layer.params:>9} {layer.mults:>12}"
            )
        lines.append(
            f"total params={self.params} ({self.params / 1e3:.1f}k) "
            f"mults={self.mults} ({self.mults / 1e6:.2f}M)"
        )
        return "\n".join(lines)


class _Ledger:
    def __init__(self, report: CostReport, channels: int, height: int, width: int) -> None:
        self.report = report
        self.shape = (channels, height, width)

    def conv(self, name: str, spec: ConvSpec, out_channels: int) -> None:
        cin, h, w = self.shape
        oh, ow = spec.output_hw(h, w)
        kh, kw = spec.kernel
        params = out_channels * (cin // spec.groups) * kh * kw + (out_channels if spec.bias else 0)
        self.shape = (out_channels, oh, ow)
        self.report.layers.append(
            LayerCost(name, "conv", params, spec.mults(cin, out_channels, h, w), self.shape)
        )

    def norm(self, name: str, sub_bands: int = 1) -> None:
        c, h, w = self.shape
        self.report.layers.append(LayerCost(name, "norm", 2 * c * sub_bands, c * h * w, self.shape))

    def attention(self, name: str) -> None:
        c, h, w = self.shape
        self.report.layers.append(LayerCost(name, "attention", 0, c * h * w, self.shape))


def cost_report(cfg: ModelConfig, frames: Optional[int] = None) -> CostReport:
    """Walk the layer map and return the per-layer cost ledger."""

    width = cfg.frames if frames is None else frames
    report = CostReport(tau=cfg.tau, frames=width)
    ledger = _Ledger(report, 1, cfg.n_mels, width)
    ledger.conv("stem.conv", STEM_SPEC, cfg.width(STEM_WIDTH))
    ledger.norm("stem.bn")
    for index, block in enumerate(block_configs(cfg)):
        name = f"blocks.{index}"
        c = block.out_channels
        if block.is_transition:
            ledger.conv(f"{name}.front.pw", ConvSpec.pointwise(), c)
            ledger.norm(f"{name}.front.bn")
        block.output_height(ledger.shape[1])
        ledger.conv(f"{name}.f2.dw", block.f2_spec(), c)
        if block.norm_mode == "ssn":
            ledger.norm(f"{name}.f2.ssn", block.ssn_sub_bands)
        else:
            ledger.norm(f"{name}.f2.bn")
        plane = ledger.shape
        ledger.shape = (c, 1, plane[2])
        ledger.conv(f"{name}.f1.dw", block.f1_spec(), c)
        ledger.norm(f"{name}.f1.bn")
        ledger.conv(f"{name}.f1.pw", ConvSpec.pointwise(), c)
        ledger.shape = plane
        if block.combine_mode == "sigmoid_attention":
            ledger.attention(f"{name}.attention")
    last = cfg.width(STAGES[-1].width)
    ledger.conv("tail.dw", tail_spec(last), last)
    ledger.conv("tail.pw", ConvSpec.pointwise(bias=True), cfg.width(HEAD_WIDTH))
    ledger.conv("classifier", ConvSpec.pointwise(bias=True), cfg.n_classes)
    return report


def count_params(cfg: ModelConfig) -> int:
    """Exact number of learnable scalars of ``cfg``."""

    return cost_report(cfg).params


def count_mults(cfg: ModelConfig, frames: Optional[int] = None) -> int:
    """Exact multiplies of one forward pass at ``frames`` input frames."""

    return cost_report(cfg, frames).mults


__all__ = ["CONVENTION", "CostReport", "LayerCost", "cost_report", "count_mults", "count_params"]
