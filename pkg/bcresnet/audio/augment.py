"""Training-time augmentations: time shift, background noise and SpecAugment."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence

import numpy as np

from ..core.tensor import ConfigurationError, FloatArray
from .features import CLIP_SAMPLES, SAMPLE_RATE, AudioFormatError, LogMelSpec, Waveform

logger = logging.getLogger(__name__)

MAX_SHIFT_MS = 100.0
SAMPLES_PER_MS = SAMPLE_RATE // 1000


def time_shift(waveform: Waveform, shift_ms: float) -> Waveform:
    """Displace the samples by ``round(shift_ms * 16)``, zero-filling the gap.

    Positive shifts delay the signal, negative shifts advance it.
    """

    if abs(shift_ms) > MAX_SHIFT_MS:
        msg = f"Time shift {shift_ms} ms exceeds +/-{MAX_SHIFT_MS} ms"
        raise AudioFormatError(msg)
    offset = int(round(shift_ms * SAMPLES_PER_MS))
    samples = waveform.samples
    if offset == 0:
        return Waveform(samples.copy())
    out = np.zeros_like(samples)
    if offset > 0:
        out[offset:] = samples[:-offset]
    else:
        out[:offset] = samples[-offset:]
    return Waveform(out)


def random_time_shift(
    waveform: Waveform, rng: np.random.Generator, max_ms: float = MAX_SHIFT_MS
) -> Waveform:
    """:func:`time_shift` by a uniform draw from ``[-max_ms, max_ms]``."""

    if max_ms <= 0:
        return waveform
    return time_shift(waveform, float(rng.uniform(-max_ms, max_ms)))


def mix_background(
    waveform: Waveform,
    noises: Sequence[FloatArray],
    rng: np.random.Generator,
    prob: float = 0.8,
    *,
    max_gain: float = 0.1,
    gain: Optional[float] = None,
) -> Waveform:
    """With probability ``prob`` add a random one-second noise crop.

    The crop comes from a uniformly chosen clip at a uniform offset and is
    scaled by ``gain`` (drawn from ``[0, max_gain]`` unless given). The sum
    is clipped to ``[-1, 1]``.
    """

    if not 0.0 <= prob <= 1.0:
        msg = f"Noise probability must lie in [0, 1], got {prob}"
        raise ConfigurationError(msg)
    if rng.random() >= prob:
        return waveform
    if not noises:
        logger.warning("no background noise clips available; noise mixing skipped")
        return waveform
    clip = noises[int(rng.integers(len(noises)))]
    if clip.size < CLIP_SAMPLES:
        msg = f"Background clip holds {clip.size} samples; at least {CLIP_SAMPLES} required"
        raise AudioFormatError(msg)
    offset = int(rng.integers(0, clip.size - CLIP_SAMPLES + 1))
    alpha = float(rng.uniform(0.0, max_gain)) if gain is None else gain
    if alpha == 0.0:
        return waveform
    crop = clip[offset : offset + CLIP_SAMPLES]
    mixed = np.clip(waveform.samples + alpha * crop, -1.0, 1.0)
    return Waveform(mixed.astype(np.float32))


@dataclass(frozen=True, slots=True)
class Mask:
    """One SpecAugment rectangle spanning a full axis."""

    axis: Literal["freq", "time"]
    start: int
    width: int


def draw_masks(
    shape: tuple[int, int],
    rng: np.random.Generator,
    *,
    freq_param: int,
    time_param: int,
    freq_masks: int = 2,
    time_masks: int = 2,
) -> List[Mask]:
    """Sample frequency masks then time masks for a ``(bins, frames)`` spectrogram.

    Widths are uniform over ``0..param`` and starts uniform over the valid range.
    """

    bins, frames = shape
    if not 0 <= freq_param <= bins or not 0 <= time_param <= frames:
        msg = (
            f"Mask parameters F={freq_param}, T={time_param} "
            f"do not fit a {bins}x{frames} spectrogram"
        )
        raise ConfigurationError(msg)
    masks: List[Mask] = []
    for axis, param, count, extent in (
        ("freq", freq_param, freq_masks, bins),
        ("time", time_param, time_masks, frames),
    ):
        for _ in range(count):
            width = int(rng.integers(0, param + 1))
            start = int(rng.integers(0, extent - width + 1))
            masks.append(Mask(axis, start, width))  # type: ignore[arg-type]
    return masks


def apply_masks(spec: LogMelSpec, masks: Sequence[Mask]) -> LogMelSpec:
    """Zero the cells covered by ``masks``."""

    values = spec.values.copy()
    for mask in masks:
        span = slice(mask.start, mask.start + mask.width)
        if mask.axis == "freq":
            values[span, :] = 0.0
        else:
            values[:, span] = 0.0
    return LogMelSpec(values)


def spec_augment(
    spec: LogMelSpec,
    rng: np.random.Generator,
    *,
    freq_param: int,
    time_param: int = 20,
    freq_masks: int = 2,
    time_masks: int = 2,
) -> LogMelSpec:
    """Frequency and time masking without time warping."""

    if freq_param == 0 and time_param == 0:
        return spec
    masks = draw_masks(
        spec.shape,
        rng,
        freq_param=freq_param,
        time_param=time_param,
        freq_masks=freq_masks,
        time_masks=time_masks,
    )
    return apply_masks(spec, masks)


__all__ = [
    "MAX_SHIFT_MS",
    "Mask",
    "apply_masks",
    "draw_masks",
    "mix_background",
    "random_time_shift",
    "spec_augment",
    "time_shift",
]
