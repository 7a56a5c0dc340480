"""Repositories resolve examples to waveforms for the batch loader."""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
import pandera as pa

from ..audio.features import CLIP_SAMPLES, AudioFormatError, Waveform
from ..audio.io import read_pcm, read_wav
from ..core.tensor import FloatArray
from .models import (
    BACKGROUND_DIR,
    KEYWORDS,
    MANIFEST_SCHEMA,
    SILENCE_LABEL,
    DatasetError,
    Example,
    Manifest,
    ManifestEntry,
    SilenceSource,
    Split,
    Version,
    check_disjoint,
    is_silence,
)
from .synthetic import MICRO_CLASSES, MicroSet, micro_fixture

logger = logging.getLogger(__name__)

VALIDATION_LIST = "validation_list.txt"
TESTING_LIST = "testing_list.txt"
ZERO_SILENCE_PROB = 0.1
REBALANCED_SPLITS: tuple[Split, ...] = ("train", "val")


class DataRepository(ABC):
    """Abstract source of labelled one-second waveforms."""

    class_names: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        """Number of output classes."""

        return len(self.class_names)

    @abstractmethod
    def examples(self, split: Split) -> List[Example]:
        """Return the examples of ``split`` in a stable order."""

    @abstractmethod
    def load_waveform(self, example: Example) -> Waveform:
        """Resolve ``example`` to audio."""

    def background_clips(self) -> List[FloatArray]:
        """Noise clips available for mixing; none by default."""

        return []


# -- Speech Commands ---------------------------------------------------------
def _read_list(path: Path) -> set[str]:
    if not path.is_file():
        msg = f"Missing split list {path}"
        raise DatasetError(msg)
    return {line.strip() for line in path.read_text(encoding="utf8").splitlines() if line.strip()}


def load_manifest(root: Path, version: Version = "v2") -> Manifest:
    """Scan a Speech Commands extraction and assign splits from its list files."""

    root = Path(root)
    validation = _read_list(root / VALIDATION_LIST)
    testing = _read_list(root / TESTING_LIST)
    entries: List[ManifestEntry] = []
    for word_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if word_dir.name.startswith("_"):
            continue
        for wav in sorted(word_dir.glob("*.wav")):
            rel = f"{word_dir.name}/{wav.name}"
            split: Split = "test" if rel in testing else "val" if rel in validation else "train"
            entries.append(ManifestEntry(rel, word_dir.name, split))
    manifest = Manifest(entries, version=version)
    for split_name in ("train", "val", "test"):
        if not manifest.split(split_name):  # type: ignore[arg-type]
            msg = f"{root}: split {split_name!r} is empty"
            raise DatasetError(msg)
    check_disjoint(entries)
    logger.info(
        "manifest loaded root=%s version=%s train=%d val=%d test=%d",
        root,
        version,
        len(manifest.split("train")),
        len(manifest.split("val")),
        len(manifest.split("test")),
    )
    return manifest


def load_background_clips(root: Path) -> Dict[str, FloatArray]:
    """Read every WAV of the background-noise folder, keyed by relative path."""

    folder = Path(root) / BACKGROUND_DIR
    clips: Dict[str, FloatArray] = {}
    if not folder.is_dir():
        return clips
    for wav in sorted(folder.glob("*.wav")):
        samples = read_pcm(wav)
        if samples.size < CLIP_SAMPLES:
            logger.warning("background clip shorter than one second skipped path=%s", wav)
            continue
        clips[f"{BACKGROUND_DIR}/{wav.name}"] = samples
    return clips


def make_silence(
    clips: Mapping[str, FloatArray], count: int, rng: np.random.Generator
) -> List[SilenceSource]:
    """Draw ``count`` silence recipes.

    Each is a random one-second crop of a random clip scaled by a uniform
    ``[0, 1]`` gain, or pure zeros with probability 0.1.
    """

    if count <= 0:
        return []
    names = sorted(clips)
    if not names:
        logger.warning("no background clips; synthesizing %d all-zero silence examples", count)
        return [SilenceSource(None) for _ in range(count)]
    sources: List[SilenceSource] = []
    for _ in range(count):
        if rng.random() < ZERO_SILENCE_PROB:
            sources.append(SilenceSource(None))
            continue
        name = names[int(rng.integers(len(names)))]
        offset = int(rng.integers(0, clips[name].size - CLIP_SAMPLES + 1))
        sources.append(SilenceSource(name, offset, float(rng.uniform(0.0, 1.0))))
    return sources


def render_silence(source: SilenceSource, clips: Mapping[str, FloatArray]) -> Waveform:
    """Materialize a silence recipe."""

    if source.clip is None or source.gain == 0.0:
        return Waveform.silence()
    if source.clip not in clips:
        msg = f"Background clip {source.clip!r} is not available"
        raise DatasetError(msg)
    crop = clips[source.clip][source.offset : source.offset + CLIP_SAMPLES]
    return Waveform.from_samples(source.gain * crop)


def rebalance_target(manifest: Manifest, split: Split) -> int:
    """Mean utterance count of the keyword classes present, rounded half up."""

    counts = Counter(entry.label for entry in manifest.split(split) if entry.label in KEYWORDS)
    if not counts:
        msg = f"No keyword examples in split {split!r}; cannot rebalance"
        raise DatasetError(msg)
    return int(math.floor(sum(counts.values()) / len(counts) + 0.5))


def rebalance(
    manifest: Manifest,
    rng: np.random.Generator,
    *,
    clips: Optional[Mapping[str, FloatArray]] = None,
    splits: Sequence[Split] = REBALANCED_SPLITS,
) -> Manifest:
    """Subsample unknown words and synthesize silence to the keyword mean.

    Only the listed ``splits`` change; the test split keeps its shipped
    composition.
    """

    result = manifest
    for split in splits:
        target = rebalance_target(result, split)
        entries = result.split(split)
        keywords = [entry for entry in entries if entry.label in KEYWORDS]
        unknown = [
            entry
            for entry in entries
            if entry.label not in KEYWORDS and entry.label != SILENCE_LABEL
        ]
        if len(unknown) > target:
            chosen = np.sort(rng.choice(len(unknown), size=target, replace=False))
            unknown = [unknown[int(i)] for i in chosen]
        elif len(unknown) < target:
            logger.warning(
                "fewer unknown utterances than target split=%s unknown=%d target=%d",
                split,
                len(unknown),
                target,
            )
        silence = [
            ManifestEntry(source.to_path(), SILENCE_LABEL, split)
            for source in make_silence(clips or {}, target, rng)
        ]
        result = result.replace_split(split, keywords + unknown + silence)
        logger.info(
            "rebalanced split=%s target=%d unknown=%d silence=%d",
            split,
            target,
            len(unknown),
            len(silence),
        )
    return result


def export_manifest(manifest: Manifest, path: Path) -> Path:
    """Write ``path,label,split`` UTF-8 CSV."""

    frame = pd.DataFrame(
        [(entry.path, entry.label, entry.split) for entry in manifest.entries],
        columns=["path", "label", "split"],
    )
    MANIFEST_SCHEMA.validate(frame)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8")
    return path


def import_manifest(path: Path, version: Version = "v2") -> Manifest:
    """Read a CSV written by :func:`export_manifest`, validating its schema."""

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
        frame = MANIFEST_SCHEMA.validate(frame)
    except (OSError, pd.errors.ParserError, pa.errors.SchemaError) as exc:
        msg = f"{path}: invalid manifest: {exc}"
        raise DatasetError(msg) from exc
    entries = [
        ManifestEntry(str(row.path), str(row.label), str(row.split))  # type: ignore[arg-type]
        for row in frame.itertuples(index=False)
    ]
    return Manifest(entries, version=version)


class SpeechCommandsRepository(DataRepository):
    """Google Speech Commands on disk, relabelled to twelve classes."""

    def __init__(self, root: Path, manifest: Manifest, clips: Mapping[str, FloatArray]) -> None:
        self.root = Path(root)
        self.manifest = manifest
        self.class_names = manifest.class_names
        self._clips = dict(clips)

    @classmethod
    def from_directory(
        cls, root: Path, version: Version = "v2", *, seed: int = 0, rebalanced: bool = True
    ) -> "SpeechCommandsRepository":
        """Load, optionally rebalance, and wrap an extracted corpus."""

        root = Path(root)
        if not root.is_dir():
            msg = f"Dataset directory {root} does not exist"
            raise DatasetError(msg)
        manifest = load_manifest(root, version)
        clips = load_background_clips(root)
        if rebalanced:
            manifest = rebalance(manifest, np.random.default_rng(seed), clips=clips)
        return cls(root, manifest, clips)

    def examples(self, split: Split) -> List[Example]:
        return self.manifest.examples(split)

    def load_waveform(self, example: Example) -> Waveform:
        if is_silence(example.source):
            return render_silence(SilenceSource.parse(example.source), self._clips)
        try:
            return read_wav(self.root / example.source)
        except AudioFormatError as exc:
            msg = f"Cannot load {example.source}: {exc}"
            raise DatasetError(msg) from exc

    def background_clips(self) -> List[FloatArray]:
        return [self._clips[name] for name in sorted(self._clips)]


class MicroRepository(DataRepository):
    """In-memory synthetic corpus; see :func:`micro_fixture`."""

    class_names = MICRO_CLASSES

    def __init__(self, seed: int = 0) -> None:
        train, val, test = micro_fixture(seed)
        self._sets: Dict[str, MicroSet] = {"train": train, "val": val, "test": test}
        self._waveforms: Dict[str, Waveform] = {}
        for micro_set in self._sets.values():
            self._waveforms.update(micro_set.waveforms)

    def examples(self, split: Split) -> List[Example]:
        return list(self._sets[split].examples)

    def load_waveform(self, example: Example) -> Waveform:
        try:
            return self._waveforms[example.source]
        except KeyError as exc:
            msg = f"Unknown synthetic example {example.source!r}"
            raise DatasetError(msg) from exc


__all__ = [
    "DataRepository",
    "MicroRepository",
    "SpeechCommandsRepository",
    "export_manifest",
    "import_manifest",
    "load_background_clips",
    "load_manifest",
    "make_silence",
    "rebalance",
    "rebalance_target",
    "render_silence",
]
