"""Runtime multiply counter filled in by the conv and norm kernels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator


@dataclass(slots=True)
class MultCounter:
    """Accumulates scalar multiplications per labelled layer."""

    per_layer: Dict[str, int] = field(default_factory=dict)
    """Multiplies keyed by layer label, in first-seen order."""

    def add(self, label: str, mults: int) -> None:
        """Add ``mults`` multiplications under ``label``."""

        self.per_layer[label] = self.per_layer.get(label, 0) + int(mults)

    @property
    def total(self) -> int:
        """Sum over all layers."""

        return sum(self.per_layer.values())

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self.per_layer.items())

    def reset(self) -> None:
        """Forget every recorded count."""

        self.per_layer.clear()


__all__ = ["MultCounter"]
