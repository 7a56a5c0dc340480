"""Loss, learning-rate schedule, metrics and the SGD training loop."""

from .loss import accuracy, cross_entropy
from .metrics import (
    METRICS_COLUMNS,
    EpochMetrics,
    MetricsLog,
    TrainingReport,
    generate_report,
    read_metrics,
)
from .schedule import lr_at
from .trainer import (
    BEST_CHECKPOINT,
    FINAL_CHECKPOINT,
    METRICS_FILE,
    TrainResult,
    Trainer,
    TrainingDivergedError,
    evaluate,
    train,
)

__all__ = [
    "BEST_CHECKPOINT",
    "EpochMetrics",
    "FINAL_CHECKPOINT",
    "METRICS_COLUMNS",
    "METRICS_FILE",
    "MetricsLog",
    "TrainResult",
    "Trainer",
    "TrainingDivergedError",
    "TrainingReport",
    "accuracy",
    "cross_entropy",
    "evaluate",
    "generate_report",
    "lr_at",
    "read_metrics",
    "train",
]
