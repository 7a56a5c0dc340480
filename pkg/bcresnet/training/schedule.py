"""Learning-rate schedule: linear warmup then cosine annealing."""

from __future__ import annotations

import math

from ..config.settings import ScheduleConfig
from ..core.tensor import ConfigurationError


def lr_at(progress: float, cfg: ScheduleConfig) -> float:
    """Learning rate after ``progress`` (fractional) epochs.

    ``peak * progress / warmup`` during warmup, then
    ``floor + (peak - floor) * (1 + cos(pi * t)) / 2`` with ``t`` running from
    0 at the end of warmup to 1 at ``total_epochs``.
    """

    if not 0.0 <= progress <= cfg.total_epochs:
        msg = f"progress={progress} lies outside [0, {cfg.total_epochs}]"
        raise ConfigurationError(msg)
    if progress < cfg.warmup_epochs:
        return cfg.peak_lr * progress / cfg.warmup_epochs
    t = (progress - cfg.warmup_epochs) / (cfg.total_epochs - cfg.warmup_epochs)
    return cfg.floor_lr + (cfg.peak_lr - cfg.floor_lr) * 0.5 * (1.0 + math.cos(math.pi * t))


__all__ = ["lr_at"]
