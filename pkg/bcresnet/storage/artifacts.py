"""Utilities for tracking the files a training run writes."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator


@dataclass(slots=True)
class Artifact:
    """Metadata describing a stored artifact."""

    name: str
    path: Path
    checksum: str | None = None

    @classmethod
    def from_file(cls, name: str, path: Path) -> "Artifact":
        """Describe ``path`` with the SHA-256 of its current contents."""

        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        return cls(name=name, path=Path(path), checksum=digest)

    def verify(self) -> bool:
        """Return ``True`` when the file still matches :attr:`checksum`."""

        if self.checksum is None or not self.path.exists():
            return False
        return hashlib.sha256(self.path.read_bytes()).hexdigest() == self.checksum


class ArtifactRegistry:
    """In-memory registry for run artifacts."""

    def __init__(self) -> None:
        self._artifacts: Dict[str, Artifact] = {}

    def register(self, artifact: Artifact) -> None:
        """Register ``artifact`` replacing any existing entry with the same name."""

        self._artifacts[artifact.name] = artifact

    def record(self, name: str, path: Path) -> Artifact:
        """Checksum ``path`` and register it under ``name``."""

        artifact = Artifact.from_file(name, path)
        self.register(artifact)
        return artifact

    def get(self, name: str) -> Artifact:
        """Return the artifact metadata for ``name``."""

        return self._artifacts[name]

    def __contains__(self, name: object) -> bool:
        return name in self._artifacts

    def __iter__(self) -> Iterator[Artifact]:
        return iter(self._artifacts.values())

    def summary(self) -> str:
        """One ``name  sha256  path`` line per artifact."""

        return "\n".join(
            f"{artifact.name:<12} {(artifact.checksum or '-')[:16]}  {artifact.path}"
            for artifact in self
        )

    def clear(self) -> None:
        """Remove all stored artifact metadata."""

        self._artifacts.clear()


__all__ = ["Artifact", "ArtifactRegistry"]
