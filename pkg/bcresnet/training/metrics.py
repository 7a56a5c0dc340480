"""Per-epoch metrics, the JSON-lines metrics log and run summaries."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, List

import pandas as pd

METRICS_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "val_acc", "wall_time_s"]


@dataclass(slots=True)
class EpochMetrics:
    """One line of the metrics log."""

    epoch: int
    """1-based epoch number."""
    lr: float
    """Learning rate of the last step of the epoch."""
    train_loss: float
    """Mean training loss over the epoch."""
    train_acc: float
    """Training accuracy over the epoch (training mode)."""
    val_acc: float
    """Validation accuracy after the epoch (eval mode)."""
    wall_time_s: float
    """Seconds spent in the epoch; 0.0 in deterministic runs."""

    def to_json(self) -> str:
        """Serialize as one JSON object with a fixed key order."""

        return json.dumps(asdict(self))


class MetricsLog:
    """Append-only JSON-lines file."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf8")

    def append(self, metrics: EpochMetrics) -> None:
        """Write ``metrics`` as a new line."""

        with self.path.open("a", encoding="utf8") as fh:
            fh.write(metrics.to_json() + "\n")


def read_metrics(path: Path) -> pd.DataFrame:
    """Load a metrics log into a frame with :data:`METRICS_COLUMNS`."""

    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return pd.DataFrame(columns=METRICS_COLUMNS)
    return pd.read_json(path, lines=True)[METRICS_COLUMNS]


@dataclass(slots=True)
class TrainingReport:
    """Container for summary statistics of a run."""

    epochs: int
    """Number of completed epochs."""
    best_epoch: int
    """Epoch with the highest validation accuracy (later epoch on ties)."""
    best_val_acc: float
    """Validation accuracy of :attr:`best_epoch`."""
    final_train_loss: float
    """Training loss of the last epoch."""
    final_train_acc: float
    """Training accuracy of the last epoch."""
    final_val_acc: float
    """Validation accuracy of the last epoch."""


def generate_report(history: Iterable[EpochMetrics]) -> TrainingReport:
    """Aggregate per-epoch metrics into a :class:`TrainingReport`."""

    rows: List[EpochMetrics] = list(history)
    if not rows:
        return TrainingReport(0, 0, 0.0, 0.0, 0.0, 0.0)
    best = rows[0]
    for row in rows[1:]:
        if row.val_acc >= best.val_acc:
            best = row
    last = rows[-1]
    return TrainingReport(
        epochs=len(rows),
        best_epoch=best.epoch,
        best_val_acc=best.val_acc,
        final_train_loss=last.train_loss,
        final_train_acc=last.train_acc,
        final_val_acc=last.val_acc,
    )


__all__ = [
    "EpochMetrics",
    "METRICS_COLUMNS",
    "MetricsLog",
    "TrainingReport",
    "generate_report",
    "read_metrics",
]
