"""Application settings and configuration models."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..core.tensor import ConfigurationError

PUBLISHED_FREQ_MASKS: dict[float, int] = {1.0: 0, 1.5: 1, 2.0: 3, 3.0: 5, 6.0: 7, 8.0: 7}
"""SpecAugment frequency-mask parameter per published width multiplier (0 = off)."""


def default_freq_mask(tau: float) -> int:
    """Frequency-mask parameter for ``tau``.

    Widths between the published ones take the value of the largest published
    width not exceeding ``tau``; widths below 1 disable frequency masking.
    """

    eligible = [key for key in PUBLISHED_FREQ_MASKS if key <= tau]
    return PUBLISHED_FREQ_MASKS[max(eligible)] if eligible else 0


def scale_width(base: int, tau: float) -> int:
    """Round ``base * tau`` half up; raise when the width collapses to zero."""

    width = math.floor(base * tau + 0.5)
    if width < 1:
        msg = f"Width {base} scaled by tau={tau} rounds to {width}"
        raise ConfigurationError(msg)
    return width


class ModelConfig(BaseModel):
    """Architecture hyperparameters of BC-ResNet-tau."""

    model_config = ConfigDict(frozen=True)

    tau: float = Field(1.0, gt=0)
    """Width multiplier applied to every channel count."""
    n_classes: int = Field(12, ge=2)
    """Number of output classes."""
    n_mels: int = Field(40, ge=1)
    """Input frequency height."""
    frames: int = Field(98, ge=1)
    """Input time width ``W``."""
    ssn_sub_bands: int = Field(5, ge=1)
    """Sub-bands of the SubSpectral Normalization in every block."""
    dropout_p: float = Field(0.1, ge=0.0, lt=1.0)
    """Channel dropout rate at the end of f1."""
    reduce_mode: Literal["avg", "max"] = "avg"
    """Frequency reduction before the temporal branch."""
    combine_mode: Literal["broadcast_add", "sigmoid_attention"] = "broadcast_add"
    """How the temporal branch is merged into the 2-D features."""
    norm_mode: Literal["ssn", "bn"] = "ssn"
    """Normalization following the frequency-depthwise conv."""
    use_2d_residual: bool = True
    """Keep the auxiliary 2-D residual term in every block."""

    def width(self, base: int) -> int:
        """Scaled channel count for ``base``."""

        return scale_width(base, self.tau)


class AugmentConfig(BaseModel):
    """Training-time augmentation settings."""

    model_config = ConfigDict(frozen=True)

    time_shift_ms: float = Field(100.0, ge=0.0, le=100.0)
    """Shifts are drawn uniformly from ``[-time_shift_ms, time_shift_ms]``."""
    noise_prob: float = Field(0.8, ge=0.0, le=1.0)
    """Probability of mixing a background noise crop."""
    noise_max_gain: float = Field(0.1, ge=0.0)
    """Upper bound of the uniform noise gain."""
    spec_augment: bool = True
    """Apply SpecAugment masks after the log-Mel transform."""
    freq_mask_param: Optional[int] = Field(None, ge=0)
    """Frequency-mask parameter ``F``; ``None`` picks the width default."""
    time_mask_param: int = Field(20, ge=0)
    """Time-mask parameter ``T``."""
    freq_masks: int = Field(2, ge=0)
    """Number of frequency masks."""
    time_masks: int = Field(2, ge=0)
    """Number of time masks."""

    def resolved_freq_mask(self, tau: float) -> int:
        """Return ``freq_mask_param`` or the default for ``tau``."""

        if self.freq_mask_param is not None:
            return self.freq_mask_param
        return default_freq_mask(tau)

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        """Configuration applying no augmentation at all."""

        return cls(time_shift_ms=0.0, noise_prob=0.0, spec_augment=False)


class ScheduleConfig(BaseModel):
    """Linear warmup followed by cosine decay."""

    model_config = ConfigDict(frozen=True)

    total_epochs: float = Field(200.0, gt=0)
    """Length of the whole schedule in epochs."""
    warmup_epochs: float = Field(5.0, ge=0)
    """Epochs of linear warmup from zero."""
    peak_lr: float = Field(0.1, gt=0)
    """Learning rate reached at the end of warmup."""
    floor_lr: float = Field(0.0, ge=0)
    """Learning rate at the end of the cosine phase."""

    @model_validator(mode="after")
    def _check_warmup(self) -> "ScheduleConfig":
        if self.warmup_epochs >= self.total_epochs:
            msg = (
                f"warmup_epochs={self.warmup_epochs} must be below "
                f"total_epochs={self.total_epochs}"
            )
            raise ValueError(msg)
        return self

    def scaled(self, total_epochs: float) -> "ScheduleConfig":
        """Shrink or stretch the schedule keeping the warmup fraction."""

        fraction = self.warmup_epochs / self.total_epochs
        return self.model_copy(
            update={"total_epochs": float(total_epochs), "warmup_epochs": fraction * total_epochs}
        )


class TrainSettings(BaseModel):
    """Optimizer and loop settings of a training run."""

    model_config = ConfigDict(frozen=True)

    epochs: Optional[int] = Field(None, ge=0)
    """Epochs to run; ``None`` runs the whole schedule."""
    batch_size: int = Field(100, ge=1)
    """Minibatch size."""
    seed: int = 0
    """Seed of every random stream in the run."""
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    """SGD momentum."""
    weight_decay: float = Field(0.001, ge=0.0)
    """L2 coefficient on convolution weights."""
    deterministic: bool = True
    """Zero the wall times in the metrics log so reruns are byte-identical."""
    workers: int = Field(1, ge=1)
    """Feature extraction threads."""
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    """Learning-rate schedule."""
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    """Training-time augmentation."""

    @property
    def total_epochs(self) -> int:
        """Number of epochs the run will actually execute."""

        return int(self.schedule.total_epochs) if self.epochs is None else self.epochs

    def effective_schedule(self) -> ScheduleConfig:
        """Schedule scaled to :attr:`epochs` when that differs from the recipe."""

        if self.epochs is None or self.epochs == self.schedule.total_epochs:
            return self.schedule
        return self.schedule.scaled(self.epochs)


class AppSettings(BaseSettings):
    """Primary configuration object, overridable through ``BCRES_*`` variables."""

    model_config = SettingsConfigDict(env_prefix="BCRES_", env_nested_delimiter="__")

    model: ModelConfig = Field(default_factory=ModelConfig)
    """Architecture."""
    train: TrainSettings = Field(default_factory=TrainSettings)
    """Training loop."""
    output_dir: Path = Path("runs")
    """Directory receiving checkpoints and metrics."""
    log_level: str = "INFO"
    """Root logging level."""


def load_settings(**overrides) -> AppSettings:
    """Load settings merging optional overrides (typically parsed from YAML)."""

    return AppSettings(**overrides)


__all__ = [
    "AppSettings",
    "AugmentConfig",
    "ModelConfig",
    "PUBLISHED_FREQ_MASKS",
    "ScheduleConfig",
    "TrainSettings",
    "default_freq_mask",
    "load_settings",
    "scale_width",
]
