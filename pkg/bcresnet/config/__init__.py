"""Configuration package exposing model, training and application settings."""

from .settings import (
    AppSettings,
    AugmentConfig,
    ModelConfig,
    ScheduleConfig,
    TrainSettings,
    default_freq_mask,
    load_settings,
    scale_width,
)

__all__ = [
    "AppSettings",
    "AugmentConfig",
    "ModelConfig",
    "ScheduleConfig",
    "TrainSettings",
    "default_freq_mask",
    "load_settings",
    "scale_width",
]
