"""Synthetic four-class corpus for desk-scale training runs.

Every class occupies its own spectral band so a small network can separate
them within a few epochs:

* ``low_tone``  - sine between 300 and 500 Hz
* ``mid_tone``  - sine between 900 and 1300 Hz
* ``chirp``     - linear sweep inside 2 - 3 kHz
* ``hiss``      - white noise band-limited to 4.5 - 6.5 kHz

Each utterance is a randomly placed, tapered burst over a faint noise floor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from ..audio.features import CLIP_SAMPLES, SAMPLE_RATE, Waveform
from ..core.tensor import FloatArray
from .models import Example

MICRO_CLASSES: tuple[str, ...] = ("low_tone", "mid_tone", "chirp", "hiss")
UTTERANCES_PER_CLASS = 64
SPLIT_SIZES = {"train": 48, "val": 8, "test": 8}
NOISE_FLOOR = 0.005

_TIME = np.arange(CLIP_SAMPLES) / SAMPLE_RATE


@dataclass(slots=True)
class MicroSet:
    """One split of the synthetic corpus."""

    examples: List[Example]
    """Labelled keys into :attr:`waveforms`."""
    waveforms: Dict[str, Waveform]
    """In-memory audio keyed by example source."""

    def __len__(self) -> int:
        return len(self.examples)


def _tone(rng: np.random.Generator, low: float, high: float) -> FloatArray:
    freq = rng.uniform(low, high)
    return np.sin(2 * np.pi * freq * _TIME + rng.uniform(0, 2 * np.pi))


def _chirp(rng: np.random.Generator) -> FloatArray:
    start = rng.uniform(2000.0, 2300.0)
    stop = rng.uniform(2700.0, 3000.0)
    rate = (stop - start) / (CLIP_SAMPLES / SAMPLE_RATE)
    return np.sin(2 * np.pi * (start * _TIME + 0.5 * rate * _TIME**2))


def _hiss(rng: np.random.Generator) -> FloatArray:
    spectrum = np.fft.rfft(rng.standard_normal(CLIP_SAMPLES))
    freqs = np.fft.rfftfreq(CLIP_SAMPLES, d=1.0 / SAMPLE_RATE)
    spectrum[(freqs < 4500.0) | (freqs > 6500.0)] = 0.0
    band = np.fft.irfft(spectrum, n=CLIP_SAMPLES)
    return band / np.max(np.abs(band))


_GENERATORS: tuple[Callable[[np.random.Generator], FloatArray], ...] = (
    lambda rng: _tone(rng, 300.0, 500.0),
    lambda rng: _tone(rng, 900.0, 1300.0),
    _chirp,
    _hiss,
)


def _envelope(rng: np.random.Generator) -> FloatArray:
    length = int(rng.uniform(0.4, 0.8) * CLIP_SAMPLES)
    start = int(rng.integers(0, CLIP_SAMPLES - length + 1))
    envelope = np.zeros(CLIP_SAMPLES)
    envelope[start : start + length] = np.hanning(length)
    return envelope


def synth_utterance(seed: int, label: int, index: int) -> Waveform:
    """Render utterance ``index`` of class ``label``; pure function of its arguments."""

    rng = np.random.default_rng(np.random.SeedSequence((seed, label, index)))
    amplitude = rng.uniform(0.3, 0.6)
    signal = amplitude * _GENERATORS[label](rng) * _envelope(rng)
    signal += NOISE_FLOOR * rng.standard_normal(CLIP_SAMPLES)
    return Waveform(np.clip(signal, -1.0, 1.0).astype(np.float32))


def micro_fixture(seed: int = 0) -> tuple[MicroSet, MicroSet, MicroSet]:
    """Return deterministic ``(train, val, test)`` splits, 48/8/8 per class."""

    sets = {name: MicroSet([], {}) for name in SPLIT_SIZES}
    for label, class_name in enumerate(MICRO_CLASSES):
        index = 0
        for split, size in SPLIT_SIZES.items():
            for _ in range(size):
                key = f"micro/{split}/{class_name}/{index:02d}"
                sets[split].waveforms[key] = synth_utterance(seed, label, index)
                sets[split].examples.append(Example(key, label, len(MICRO_CLASSES)))
                index += 1
    return sets["train"], sets["val"], sets["test"]


__all__ = [
    "MICRO_CLASSES",
    "MicroSet",
    "SPLIT_SIZES",
    "UTTERANCES_PER_CLASS",
    "micro_fixture",
    "synth_utterance",
]
