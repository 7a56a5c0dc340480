"""Minibatch iteration with per-utterance seeded augmentation.

Each utterance gets its own random stream derived from
``(seed, epoch, index)``, so the emitted batches do not depend on the
number of worker threads or on the order features are computed in.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from ..audio.augment import mix_background, random_time_shift, spec_augment
from ..audio.features import log_mel
from ..config.settings import AugmentConfig
from ..core.tensor import FloatArray
from .models import DatasetError, Example
from .repositories import DataRepository

Batch = tuple[FloatArray, NDArray[np.int64]]


@dataclass(slots=True)
class FeaturePipeline:
    """Waveform-to-spectrogram transform for one split."""

    repository: DataRepository
    """Source of audio and background noise."""
    training: bool = False
    """Apply augmentation when true."""
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    """Augmentation settings, ignored in eval mode."""
    freq_mask_param: int = 0
    """Resolved SpecAugment frequency-mask parameter."""
    seed: int = 0
    """Global seed of the run."""

    def features(self, example: Example, index: int, epoch: int) -> FloatArray:
        """``(40, 98)`` spectrogram of ``example`` at dataset position ``index``."""

        waveform = self.repository.load_waveform(example)
        if not self.training:
            return log_mel(waveform).values
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, epoch, index)))
        cfg = self.augment
        waveform = random_time_shift(waveform, rng, cfg.time_shift_ms)
        clips = self.repository.background_clips()
        if clips:
            waveform = mix_background(
                waveform, clips, rng, cfg.noise_prob, max_gain=cfg.noise_max_gain
            )
        spec = log_mel(waveform)
        if cfg.spec_augment:
            spec = spec_augment(
                spec,
                rng,
                freq_param=self.freq_mask_param,
                time_param=cfg.time_mask_param,
                freq_masks=cfg.freq_masks,
                time_masks=cfg.time_masks,
            )
        return spec.values


def epoch_order(count: int, seed: int, epoch: int, shuffle: bool) -> NDArray[np.int64]:
    """Dataset indices in visiting order for one epoch."""

    if not shuffle:
        return np.arange(count, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence((seed, epoch)))
    return rng.permutation(count).astype(np.int64)


def batches(
    examples: Sequence[Example],
    pipeline: FeaturePipeline,
    batch_size: int = 100,
    *,
    epoch: int = 0,
    workers: int = 1,
    executor: Optional[ThreadPoolExecutor] = None,
) -> Iterator[Batch]:
    """Yield ``(specs (n, 1, 40, 98), labels (n,))`` batches.

    Training pipelines visit a seeded permutation that changes with
    ``epoch``; eval pipelines keep the dataset order. The last batch may be
    short.
    """

    if not examples:
        msg = "Cannot iterate over an empty split"
        raise DatasetError(msg)
    if batch_size < 1:
        msg = f"batch_size must be positive, got {batch_size}"
        raise DatasetError(msg)
    order = epoch_order(len(examples), pipeline.seed, epoch, pipeline.training)

    def extract(index: int) -> FloatArray:
        return pipeline.features(examples[index], index, epoch)

    pool = executor
    owned = pool is None and workers > 1
    if owned:
        pool = ThreadPoolExecutor(max_workers=workers)
    try:
        for start in range(0, len(order), batch_size):
            chunk = [int(i) for i in order[start : start + batch_size]]
            specs: List[FloatArray] = (
                list(pool.map(extract, chunk)) if pool else [extract(i) for i in chunk]
            )
            labels = np.array([examples[i].label for i in chunk], dtype=np.int64)
            yield np.stack(specs)[:, None, :, :].astype(np.float32), labels
    finally:
        if owned and pool is not None:
            pool.shutdown(wait=True)


__all__ = ["Batch", "FeaturePipeline", "batches", "epoch_order"]
