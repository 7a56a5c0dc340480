"""Manifest, example and label models for keyword-spotting corpora."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Literal, Optional, Sequence
from urllib.parse import parse_qs, urlsplit

import pandera as pa

KEYWORDS: tuple[str, ...] = ("yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go")
"""The ten command words, in label-index order."""
UNKNOWN_LABEL = "_unknown_"
SILENCE_LABEL = "_silence_"
SPEECH_COMMANDS_CLASSES: tuple[str, ...] = KEYWORDS + (UNKNOWN_LABEL, SILENCE_LABEL)
BACKGROUND_DIR = "_background_noise_"
SILENCE_PREFIX = f"{SILENCE_LABEL}/"
ZEROS_CLIP = "zeros"

Split = Literal["train", "val", "test"]
SPLITS: tuple[Split, ...] = ("train", "val", "test")
Version = Literal["v1", "v2", "micro"]


class DatasetError(ValueError):
    """Raised when a corpus or manifest is missing, empty or malformed."""


MANIFEST_SCHEMA = pa.DataFrameSchema(
    {
        "path": pa.Column(str, pa.Check.str_length(min_value=1)),
        "label": pa.Column(str, pa.Check.str_length(min_value=1)),
        "split": pa.Column(str, pa.Check.isin(list(SPLITS))),
    },
    checks=[
        pa.Check(
            lambda df: not df.loc[~df["path"].str.startswith(SILENCE_PREFIX), "path"]
            .duplicated()
            .any(),
            error="an utterance appears more than once",
        )
    ],
    strict=True,
    coerce=True,
)
"""Columns of the ``path,label,split`` manifest CSV."""


@dataclass(frozen=True, slots=True)
class SilenceSource:
    """Recipe of one synthetic silence clip."""

    clip: Optional[str]
    """Background clip name, ``None`` for pure zeros."""
    offset: int = 0
    """First sample of the one-second crop."""
    gain: float = 0.0
    """Scale applied to the crop."""

    def to_path(self) -> str:
        """Encode as ``_silence_/<clip|zeros>?offset=<int>&gain=<float>``."""

        clip = self.clip or ZEROS_CLIP
        return f"{SILENCE_PREFIX}{clip}?offset={self.offset}&gain={float(self.gain)!r}"

    @classmethod
    def parse(cls, path: str) -> "SilenceSource":
        """Decode a path written by :meth:`to_path`."""

        if not path.startswith(SILENCE_PREFIX):
            msg = f"Not a silence descriptor: {path!r}"
            raise DatasetError(msg)
        parts = urlsplit(path[len(SILENCE_PREFIX) :])
        query = parse_qs(parts.query)
        try:
            offset = int(query["offset"][0])
            gain = float(query["gain"][0])
        except (KeyError, ValueError) as exc:
            msg = f"Malformed silence descriptor {path!r}"
            raise DatasetError(msg) from exc
        clip = None if parts.path == ZEROS_CLIP else parts.path
        return cls(clip=clip, offset=offset, gain=gain)


def is_silence(path: str) -> bool:
    """Whether ``path`` is a synthetic silence descriptor."""

    return path.startswith(SILENCE_PREFIX)


@dataclass(frozen=True, slots=True)
class ManifestEntry:
    """One utterance of the corpus."""

    path: str
    """Path relative to the corpus root, or a silence descriptor."""
    label: str
    """Raw word (folder name), or ``_silence_``."""
    split: Split
    """Partition the utterance belongs to."""


@dataclass(frozen=True, slots=True)
class Example:
    """A labelled waveform source fed to the loader."""

    source: str
    """Relative WAV path, silence descriptor or in-memory key."""
    label: int
    """Class index."""
    num_classes: int = len(SPEECH_COMMANDS_CLASSES)
    """Size of the class map :attr:`label` indexes into."""

    def __post_init__(self) -> None:
        if not 0 <= self.label < self.num_classes:
            msg = f"Label index must lie in [0, {self.num_classes}), got {self.label}"
            raise DatasetError(msg)


@dataclass(slots=True)
class Manifest:
    """Immutable-by-convention list of utterances with the class map."""

    entries: List[ManifestEntry]
    """Utterances in discovery order."""
    version: Version = "v2"
    """Corpus release."""
    class_names: tuple[str, ...] = SPEECH_COMMANDS_CLASSES
    """Output classes; index order defines label indices."""
    _index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = {name: index for index, name in enumerate(self.class_names)}

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def label_index(self, label: str) -> int:
        """Map a raw word to its class; words outside the class map are unknown."""

        if label in self._index:
            return self._index[label]
        if UNKNOWN_LABEL in self._index:
            return self._index[UNKNOWN_LABEL]
        msg = f"Label {label!r} is not part of {self.class_names}"
        raise DatasetError(msg)

    def split(self, name: Split) -> List[ManifestEntry]:
        """Entries of one partition."""

        return [entry for entry in self.entries if entry.split == name]

    def examples(self, name: Split) -> List[Example]:
        """Entries of one partition as loader examples."""

        return [
            Example(entry.path, self.label_index(entry.label), self.num_classes)
            for entry in self.split(name)
        ]

    def class_counts(self, name: Split) -> Dict[str, int]:
        """Number of utterances per class name in one partition."""

        counts = {class_name: 0 for class_name in self.class_names}
        for entry in self.split(name):
            counts[self.class_names[self.label_index(entry.label)]] += 1
        return counts

    def replace_split(self, name: Split, entries: Iterable[ManifestEntry]) -> "Manifest":
        """Copy with the entries of ``name`` replaced, other splits untouched."""

        kept = [entry for entry in self.entries if entry.split != name]
        return Manifest(kept + list(entries), version=self.version, class_names=self.class_names)


def check_disjoint(entries: Sequence[ManifestEntry]) -> None:
    """Raise when a recorded utterance is assigned to more than one split."""

    seen: Dict[str, str] = {}
    for entry in entries:
        if is_silence(entry.path):
            continue
        previous = seen.setdefault(entry.path, entry.split)
        if previous != entry.split:
            msg = f"{entry.path} appears in both {previous} and {entry.split}"
            raise DatasetError(msg)


__all__ = [
    "BACKGROUND_DIR",
    "DatasetError",
    "Example",
    "KEYWORDS",
    "MANIFEST_SCHEMA",
    "Manifest",
    "ManifestEntry",
    "SILENCE_LABEL",
    "SPEECH_COMMANDS_CLASSES",
    "SPLITS",
    "SilenceSource",
    "Split",
    "UNKNOWN_LABEL",
    "Version",
    "check_disjoint",
    "is_silence",
]
