"""BC-ResNet keyword spotting: kernels, model, cost counter, data and training."""

from .config import AppSettings, ModelConfig, TrainSettings, load_settings
from .monitoring import GradCheckReport, configure_logging, run_gradchecks
from .nn import BCResNet, CostReport, build, cost_report, count_mults, count_params
from .storage import CheckpointError, load_model, save_checkpoint
from .training import TrainResult, Trainer, evaluate, train

__all__ = [
    "AppSettings",
    "BCResNet",
    "CheckpointError",
    "CostReport",
    "GradCheckReport",
    "ModelConfig",
    "TrainResult",
    "TrainSettings",
    "Trainer",
    "build",
    "configure_logging",
    "cost_report",
    "count_mults",
    "count_params",
    "evaluate",
    "load_model",
    "load_settings",
    "run_gradchecks",
    "save_checkpoint",
    "train",
]
