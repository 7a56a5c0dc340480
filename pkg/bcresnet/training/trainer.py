"""SGD training loop and top-1 evaluation."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..config.settings import TrainSettings
from ..core.optim import SGD
from ..core.tensor import ForwardContext
from ..data.loader import FeaturePipeline, batches
from ..data.models import Split
from ..data.repositories import DataRepository
from ..nn.model import BCResNet
from ..storage.artifacts import ArtifactRegistry
from ..storage.checkpoint import save_checkpoint
from .loss import accuracy, cross_entropy
from .metrics import EpochMetrics, MetricsLog, TrainingReport, generate_report
from .schedule import lr_at

logger = logging.getLogger(__name__)

BEST_CHECKPOINT = "best.bcrk"
FINAL_CHECKPOINT = "final.bcrk"
METRICS_FILE = "metrics.jsonl"
DIVERGENCE_FILE = "diverged.json"


class TrainingDivergedError(RuntimeError):
    """Raised when the loss of a batch is not finite."""

    def __init__(self, epoch: int, batch_index: int, lr: float, loss: float) -> None:
        self.epoch = epoch
        self.batch_index = batch_index
        self.lr = lr
        self.loss = loss
        msg = f"Non-finite loss {loss} at epoch={epoch} batch={batch_index} lr={lr:.6g}"
        super().__init__(msg)


@dataclass(slots=True)
class TrainResult:
    """Outcome of :meth:`Trainer.train`."""

    model: BCResNet
    """Model after the last step."""
    history: List[EpochMetrics] = field(default_factory=list)
    """Per-epoch metrics."""
    report: TrainingReport = field(default_factory=lambda: generate_report([]))
    """Summary of :attr:`history`."""
    steps: int = 0
    """Optimizer steps taken."""
    artifacts: ArtifactRegistry = field(default_factory=ArtifactRegistry)
    """Files written by the run."""


def evaluate(
    model: BCResNet,
    repository: DataRepository,
    split: Split,
    *,
    batch_size: int = 100,
    workers: int = 1,
) -> float:
    """Top-1 accuracy of ``model`` in eval mode on ``split``."""

    examples = repository.examples(split)
    pipeline = FeaturePipeline(repository, training=False)
    correct = 0
    ctx = ForwardContext(training=False)
    for specs, labels in batches(examples, pipeline, batch_size, workers=workers):
        logits = model.forward(specs, ctx)
        correct += int(np.sum(np.argmax(logits, axis=1) == labels))
    return correct / len(examples)


class Trainer:
    """Runs epochs of forward, cross-entropy, backward and SGD steps."""

    def __init__(
        self,
        model: BCResNet,
        repository: DataRepository,
        settings: TrainSettings,
        *,
        output_dir: Optional[Path] = None,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.model = model
        self.repository = repository
        self.settings = settings
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.metadata = dict(metadata or {})
        self.optimizer = SGD.create(
            model.parameters(), momentum=settings.momentum, weight_decay=settings.weight_decay
        )
        augment = settings.augment
        freq_param = augment.resolved_freq_mask(model.cfg.tau)
        spec_on = augment.spec_augment and (freq_param > 0 or augment.freq_mask_param is not None)
        self.pipeline = FeaturePipeline(
            repository,
            training=True,
            augment=augment.model_copy(update={"spec_augment": spec_on}),
            freq_mask_param=freq_param,
            seed=settings.seed,
        )
        dropout_seed = np.random.SeedSequence(settings.seed).spawn(1)[0]
        self._dropout_rng = np.random.default_rng(dropout_seed)
        self.steps = 0

    def _save(self, name: str, epoch: int, artifacts: ArtifactRegistry, **extra: Any) -> None:
        if self.output_dir is None:
            return
        path = save_checkpoint(
            self.model,
            self.output_dir / name,
            step=self.steps,
            metadata={**self.metadata, "seed": self.settings.seed, "epoch": epoch, **extra},
        )
        artifacts.record(name.split(".")[0], path)

    def _diverged(
        self, epoch: int, batch_index: int, lr: float, loss: float, labels: np.ndarray
    ) -> None:
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            dump = {
                "epoch": epoch,
                "batch_index": batch_index,
                "lr": lr,
                "loss": repr(loss),
                "step": self.steps,
                "labels": labels.tolist(),
            }
            path = self.output_dir / DIVERGENCE_FILE
            path.write_text(json.dumps(dump, indent=2), encoding="utf8")
        logger.error(
            "training diverged epoch=%d batch=%d lr=%.6g loss=%r", epoch, batch_index, lr, loss
        )
        raise TrainingDivergedError(epoch, batch_index, lr, loss)

    def train(self) -> TrainResult:
        """Train for the configured number of epochs and write artifacts."""

        settings = self.settings
        epochs = settings.total_epochs
        result = TrainResult(self.model)
        metrics_log: Optional[MetricsLog] = None
        if self.output_dir is not None and epochs > 0:
            metrics_log = MetricsLog(self.output_dir / METRICS_FILE)
        if epochs == 0:
            logger.info("zero epochs requested; writing the initialized model only")
            self._save(FINAL_CHECKPOINT, 0, result.artifacts)
            return result

        schedule = settings.effective_schedule()
        examples = self.repository.examples("train")
        steps_per_epoch = math.ceil(len(examples) / settings.batch_size)
        if self.pipeline.augment.noise_prob > 0 and not self.repository.background_clips():
            logger.warning("no background noise clips available; noise mixing disabled")
        best_val = -1.0
        workers = self.settings.workers
        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for epoch in range(epochs):
                started = time.perf_counter()
                loss_sum = 0.0
                correct = 0.0
                seen = 0
                lr = 0.0
                for batch_index, (specs, labels) in enumerate(
                    batches(
                        examples,
                        self.pipeline,
                        settings.batch_size,
                        epoch=epoch,
                        executor=executor,
                    )
                ):
                    lr = lr_at(epoch + batch_index / steps_per_epoch, schedule)
                    self.model.zero_grad()
                    ctx = ForwardContext(training=True, rng=self._dropout_rng)
                    logits = self.model.forward(specs, ctx)
                    loss, dlogits = cross_entropy(logits, labels)
                    if not math.isfinite(loss):
                        self._diverged(epoch + 1, batch_index, lr, loss, labels)
                    self.model.backward(dlogits)
                    self.optimizer.step(lr)
                    self.steps += 1
                    loss_sum += loss * len(labels)
                    correct += accuracy(logits, labels) * len(labels)
                    seen += len(labels)
                val_acc = evaluate(
                    self.model,
                    self.repository,
                    "val",
                    batch_size=settings.batch_size,
                    workers=workers,
                )
                elapsed = 0.0 if settings.deterministic else time.perf_counter() - started
                row = EpochMetrics(
                    epoch=epoch + 1,
                    lr=lr,
                    train_loss=loss_sum / seen,
                    train_acc=correct / seen,
                    val_acc=val_acc,
                    wall_time_s=elapsed,
                )
                result.history.append(row)
                if metrics_log is not None:
                    metrics_log.append(row)
                logger.info(
                    "epoch=%d lr=%.5f train_loss=%.4f train_acc=%.4f val_acc=%.4f",
                    row.epoch,
                    row.lr,
                    row.train_loss,
                    row.train_acc,
                    row.val_acc,
                )
                if val_acc >= best_val:
                    best_val = val_acc
                    self._save(BEST_CHECKPOINT, epoch + 1, result.artifacts, val_acc=val_acc)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)

        self._save(FINAL_CHECKPOINT, epochs, result.artifacts)
        if metrics_log is not None:
            result.artifacts.record("metrics", metrics_log.path)
        result.steps = self.steps
        result.report = generate_report(result.history)
        return result


def train(
    model: BCResNet,
    repository: DataRepository,
    settings: TrainSettings,
    *,
    output_dir: Optional[Path] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> TrainResult:
    """Convenience wrapper around :class:`Trainer`."""

    return Trainer(model, repository, settings, output_dir=output_dir, metadata=metadata).train()


__all__ = [
    "BEST_CHECKPOINT",
    "DIVERGENCE_FILE",
    "FINAL_CHECKPOINT",
    "METRICS_FILE",
    "TrainResult",
    "Trainer",
    "TrainingDivergedError",
    "evaluate",
    "train",
]
