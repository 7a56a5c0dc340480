"""Tests for settings loading and width scaling."""

import pytest
from pydantic import ValidationError

from bcresnet.config import (
    AugmentConfig,
    ModelConfig,
    ScheduleConfig,
    default_freq_mask,
    load_settings,
    scale_width,
)
from bcresnet.core.tensor import ConfigurationError


def test_defaults_describe_bc_resnet_1():
    """Out of the box the model is tau=1 on 40x98 inputs with twelve classes."""

    settings = load_settings()
    assert settings.model == ModelConfig()
    assert (settings.model.tau, settings.model.n_mels, settings.model.frames) == (1.0, 40, 98)
    assert settings.train.batch_size == 100
    assert settings.train.total_epochs == 200


def test_environment_overrides(monkeypatch):
    """BCRES_* variables reach nested fields."""

    monkeypatch.setenv("BCRES_MODEL__TAU", "3")
    monkeypatch.setenv("BCRES_TRAIN__SEED", "7")
    settings = load_settings()
    assert settings.model.tau == 3.0
    assert settings.train.seed == 7


def test_yaml_style_overrides():
    """Keyword overrides as parsed from a config file are validated."""

    settings = load_settings(model={"norm_mode": "bn"}, log_level="DEBUG")
    assert settings.model.norm_mode == "bn"
    with pytest.raises(ValidationError):
        load_settings(model={"tau": 0})


@pytest.mark.parametrize(
    "base, tau, width", [(8, 1.0, 8), (12, 1.5, 18), (20, 1.5, 30), (8, 0.5, 4), (16, 0.1, 2)]
)
def test_scale_width_rounds_half_up(base, tau, width):
    """Widths are rounded half up."""

    assert scale_width(base, tau) == width


def test_scale_width_rejects_zero_channels():
    """A collapsed width is an error."""

    with pytest.raises(ConfigurationError):
        scale_width(8, 0.05)


@pytest.mark.parametrize(
    "tau, mask", [(1.0, 0), (1.5, 1), (2.0, 3), (2.5, 3), (3.0, 5), (6.0, 7), (8.0, 7), (0.5, 0)]
)
def test_default_frequency_mask(tau, mask):
    """Published widths keep their mask parameter; others use the next smaller one."""

    assert default_freq_mask(tau) == mask
    assert AugmentConfig().resolved_freq_mask(tau) == mask


def test_explicit_frequency_mask_wins():
    """A configured mask parameter overrides the width default."""

    assert AugmentConfig(freq_mask_param=4).resolved_freq_mask(8.0) == 4
    assert not AugmentConfig.disabled().spec_augment


def test_schedule_rejects_warmup_longer_than_run():
    """Warmup must end before the schedule does."""

    with pytest.raises(ValidationError):
        ScheduleConfig(total_epochs=5, warmup_epochs=5)
