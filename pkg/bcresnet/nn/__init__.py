"""Layers, the BC-ResBlock, the BC-ResNet model and its cost counter."""

from .block import BCResBlock, BlockConfig
from .cost import CostReport, LayerCost, cost_report, count_mults, count_params
from .layers import (
    BatchNorm,
    ChannelDropout,
    Conv2d,
    FreqPool,
    Layer,
    ReLU,
    Sequential,
    SubSpectralNorm,
    Swish,
)
from .model import BCResNet, block_configs, build, stage_widths

__all__ = [
    "BCResBlock",
    "BCResNet",
    "BatchNorm",
    "BlockConfig",
    "ChannelDropout",
    "Conv2d",
    "CostReport",
    "FreqPool",
    "Layer",
    "LayerCost",
    "ReLU",
    "Sequential",
    "SubSpectralNorm",
    "Swish",
    "block_configs",
    "build",
    "cost_report",
    "count_mults",
    "count_params",
    "stage_widths",
]
