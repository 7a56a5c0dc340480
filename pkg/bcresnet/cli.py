"""Command line interface: cost report, training, evaluation and verification.

Exit codes: 0 success, 1 verification failure, 2 usage or environment error.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Callable, Dict, Optional, TypeVar

import typer
import yaml
from pydantic import ValidationError

from .audio.features import AudioFormatError, log_mel
from .audio.io import read_wav, write_featdump
from .config import AppSettings, ModelConfig, TrainSettings, load_settings
from .core.tensor import ConfigurationError
from .data.models import SPLITS, DatasetError, Version
from .data.repositories import (
    DataRepository,
    MicroRepository,
    SpeechCommandsRepository,
    export_manifest,
)
from .monitoring import configure_logging, run_gradchecks
from .nn.cost import cost_report
from .nn.model import build
from .storage.checkpoint import CheckpointError, ensure_compatible, load_checkpoint
from .training.trainer import TrainingDivergedError, evaluate, train as run_training

app = typer.Typer(help="BC-ResNet keyword spotting: cost model, training and verification")

EXIT_VERIFICATION = 1
EXIT_USAGE = 2
MICRO_DATASET = "micro"

REDUCE_MODES = ("avg", "max")
COMBINE_MODES = ("broadcast_add", "sigmoid_attention")
NORM_MODES = ("ssn", "bn")
VERSIONS = ("v1", "v2")

T = TypeVar("T")

_TAU = typer.Option(1.0, help="Width multiplier tau (> 0)")
_SEED = typer.Option(0, help="Seed of every random stream")
_CONFIG = typer.Option(None, help="Optional YAML config file")
_REDUCE = typer.Option(None, help="Frequency reduction: avg|max")
_COMBINE = typer.Option(None, help="Branch merge: broadcast_add|sigmoid_attention")
_NORM = typer.Option(None, help="Norm after the frequency conv: ssn|bn")
_NO_2D = typer.Option(False, "--no-2d-residual", help="Drop the auxiliary 2-D residual term")


@app.command()
def count(
    *,
    tau: float = _TAU,
    frames: Optional[int] = typer.Option(None, help="Input frames W (default: config, 98)"),
    reduce_mode: Optional[str] = _REDUCE,
    combine_mode: Optional[str] = _COMBINE,
    norm_mode: Optional[str] = _NORM,
    no_2d_residual: bool = _NO_2D,
    config: Optional[Path] = _CONFIG,
) -> None:
    """Print the per-layer parameter and multiply table."""

    settings = _load_config(config)
    model_cfg = _model_config(
        settings,
        tau=tau,
        frames=frames,
        reduce_mode=reduce_mode,
        combine_mode=combine_mode,
        norm_mode=norm_mode,
        no_2d_residual=no_2d_residual,
    )
    report = _guard(lambda: cost_report(model_cfg))
    typer.echo(report.table())


@app.command()
def train(
    *,
    dataset: str = typer.Option(..., help="'micro' or a Speech Commands directory"),
    version: str = typer.Option("v2", help="Speech Commands version: v1|v2"),
    tau: float = _TAU,
    seed: int = _SEED,
    epochs: Optional[int] = typer.Option(None, help="Epochs (default: full schedule)"),
    output: Optional[Path] = typer.Option(None, help="Directory for checkpoints and metrics"),
    workers: Optional[int] = typer.Option(None, help="Feature extraction threads"),
    deterministic: Optional[bool] = typer.Option(
        None, "--deterministic/--no-deterministic", help="Zero wall times in the metrics log"
    ),
    reduce_mode: Optional[str] = _REDUCE,
    combine_mode: Optional[str] = _COMBINE,
    norm_mode: Optional[str] = _NORM,
    no_2d_residual: bool = _NO_2D,
    config: Optional[Path] = _CONFIG,
) -> None:
    """Train BC-ResNet-tau and write checkpoints plus a metrics log."""

    settings = _load_config(config)
    repository = _open_dataset(dataset, version, seed)
    model_cfg = _model_config(
        settings,
        tau=tau,
        n_classes=repository.num_classes,
        reduce_mode=reduce_mode,
        combine_mode=combine_mode,
        norm_mode=norm_mode,
        no_2d_residual=no_2d_residual,
    )
    train_overrides: Dict[str, Any] = {"seed": seed}
    if epochs is not None:
        train_overrides["epochs"] = epochs
    if workers is not None:
        train_overrides["workers"] = workers
    if deterministic is not None:
        train_overrides["deterministic"] = deterministic
    train_settings = _guard(
        lambda: TrainSettings.model_validate(
            {**settings.train.model_dump(), **train_overrides}
        )
    )
    output_dir = output or settings.output_dir
    configure_logging(settings.log_level, {"seed": seed, "tau": f"{tau:g}"})

    model = _guard(lambda: build(model_cfg, rng=seed))
    typer.echo(
        f"BC-ResNet-{tau:g}: {model.num_parameters} params, "
        f"{repository.num_classes} classes, {train_settings.total_epochs} epochs"
    )
    try:
        result = run_training(
            model,
            repository,
            train_settings,
            output_dir=output_dir,
            metadata={"dataset": dataset, "version": version},
        )
    except TrainingDivergedError as exc:
        typer.echo(f"Training diverged: {exc}", err=True)
        raise typer.Exit(EXIT_VERIFICATION) from exc
    except (ConfigurationError, DatasetError) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc

    report = result.report
    if report.epochs:
        typer.echo(
            f"Epochs: {report.epochs} | Steps: {result.steps} | "
            f"Final train acc: {report.final_train_acc:.4f} | "
            f"Best val acc: {report.best_val_acc:.4f} (epoch {report.best_epoch})"
        )
    else:
        typer.echo("Epochs: 0 | initialized model saved")
    typer.echo(result.artifacts.summary())


@app.command("eval")
def evaluate_command(
    *,
    checkpoint: Path = typer.Option(..., help="Checkpoint written by train"),
    dataset: str = typer.Option(..., help="'micro' or a Speech Commands directory"),
    version: str = typer.Option("v2", help="Speech Commands version: v1|v2"),
    split: str = typer.Option("test", help="Split to score: train|val|test"),
    seed: Optional[int] = typer.Option(
        None, help="Dataset seed (default: the seed stored in the checkpoint)"
    ),
    tau: Optional[float] = typer.Option(None, help="Expected width multiplier"),
    reduce_mode: Optional[str] = _REDUCE,
    combine_mode: Optional[str] = _COMBINE,
    norm_mode: Optional[str] = _NORM,
    workers: int = typer.Option(1, help="Feature extraction threads"),
) -> None:
    """Print the top-1 accuracy of a checkpoint on one split."""

    if split not in SPLITS:
        raise typer.BadParameter(f"Unknown split '{split}'. Available: {', '.join(SPLITS)}")
    if tau is not None and tau <= 0:
        raise typer.BadParameter(f"tau must be positive, got {tau}")
    _check_choice("reduce-mode", reduce_mode, REDUCE_MODES)
    _check_choice("combine-mode", combine_mode, COMBINE_MODES)
    _check_choice("norm-mode", norm_mode, NORM_MODES)
    try:
        stored = load_checkpoint(checkpoint)
    except CheckpointError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc
    if seed is None:
        seed = int(stored.metadata.get("seed", 0))
    repository = _open_dataset(dataset, version, seed)
    try:
        requested: Dict[str, Any] = {"n_classes": repository.num_classes}
        flags = {
            "tau": tau,
            "reduce_mode": reduce_mode,
            "combine_mode": combine_mode,
            "norm_mode": norm_mode,
        }
        requested.update({key: value for key, value in flags.items() if value is not None})
        ensure_compatible(
            stored.config, stored.config.model_copy(update=requested), source=str(checkpoint)
        )
        model = stored.to_model()
    except (CheckpointError, ConfigurationError) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc
    accuracy = _guard(
        lambda: evaluate(model, repository, split, workers=workers)  # type: ignore[arg-type]
    )
    typer.echo(f"{split} accuracy: {accuracy:.4f}")


@app.command()
def gradcheck(
    *,
    seed: int = _SEED,
    threshold: float = typer.Option(1e-5, help="Maximum allowed relative error"),
    reduce_mode: Optional[str] = _REDUCE,
    combine_mode: Optional[str] = _COMBINE,
    norm_mode: Optional[str] = _NORM,
    no_2d_residual: bool = _NO_2D,
) -> None:
    """Verify every backward pass against 64-bit central differences."""

    _check_choice("reduce-mode", reduce_mode, REDUCE_MODES)
    _check_choice("combine-mode", combine_mode, COMBINE_MODES)
    _check_choice("norm-mode", norm_mode, NORM_MODES)
    report = run_gradchecks(
        seed,
        threshold=threshold,
        reduce_mode=reduce_mode or "avg",  # type: ignore[arg-type]
        combine_mode=combine_mode or "broadcast_add",  # type: ignore[arg-type]
        norm_mode=norm_mode or "ssn",  # type: ignore[arg-type]
        use_2d_residual=not no_2d_residual,
    )
    typer.echo(report.table())
    if not report.passed:
        raise typer.Exit(EXIT_VERIFICATION)


@app.command()
def featdump(
    wav: Path = typer.Argument(..., help="16 kHz mono 16-bit WAV file"),
    out: Path = typer.Argument(..., help="Destination of the binary spectrogram"),
) -> None:
    """Write the log-Mel spectrogram of a WAV file as rows, cols, float32 values."""

    try:
        spec = log_mel(read_wav(wav))
    except (AudioFormatError, OSError) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc
    write_featdump(out, spec)
    rows, cols = spec.shape
    typer.echo(f"Wrote {rows}x{cols} spectrogram to {out}")


@app.command()
def manifest(
    root: Path = typer.Argument(..., help="Extracted Speech Commands directory"),
    *,
    version: str = typer.Option("v2", help="Speech Commands version: v1|v2"),
    out: Path = typer.Option(..., help="CSV destination"),
    seed: int = _SEED,
    rebalance: bool = typer.Option(
        True, "--rebalance/--raw", help="Apply the 12-class rebalancing"
    ),
) -> None:
    """Export the train/val/test manifest of a corpus as CSV."""

    _check_choice("version", version, VERSIONS)
    repository = _guard(
        lambda: SpeechCommandsRepository.from_directory(
            root, version, seed=seed, rebalanced=rebalance  # type: ignore[arg-type]
        )
    )
    export_manifest(repository.manifest, out)
    for split in SPLITS:
        counts = repository.manifest.class_counts(split)
        typer.echo(f"{split}: {sum(counts.values())} utterances")
    typer.echo(f"Saved manifest to {out}")


def _guard(action: Callable[[], T]) -> T:
    """Run ``action`` converting configuration and data errors to exit code 2."""

    try:
        return action()
    except (
        ConfigurationError,
        DatasetError,
        CheckpointError,
        AudioFormatError,
        ValidationError,
    ) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_USAGE) from exc


def _check_choice(flag: str, value: Optional[str], choices: tuple[str, ...]) -> None:
    if value is not None and value not in choices:
        msg = f"Unknown --{flag} '{value}'. Available: {', '.join(choices)}"
        raise typer.BadParameter(msg)


def _model_config(
    settings: AppSettings,
    *,
    tau: float,
    frames: Optional[int] = None,
    n_classes: Optional[int] = None,
    reduce_mode: Optional[str] = None,
    combine_mode: Optional[str] = None,
    norm_mode: Optional[str] = None,
    no_2d_residual: bool = False,
) -> ModelConfig:
    """Merge CLI flags over the configured architecture."""

    if tau <= 0:
        raise typer.BadParameter(f"tau must be positive, got {tau}")
    _check_choice("reduce-mode", reduce_mode, REDUCE_MODES)
    _check_choice("combine-mode", combine_mode, COMBINE_MODES)
    _check_choice("norm-mode", norm_mode, NORM_MODES)
    overrides: Dict[str, Any] = {
        "tau": tau,
        "frames": frames,
        "n_classes": n_classes,
        "reduce_mode": reduce_mode,
        "combine_mode": combine_mode,
        "norm_mode": norm_mode,
    }
    merged = settings.model.model_dump()
    merged.update({key: value for key, value in overrides.items() if value is not None})
    if no_2d_residual:
        merged["use_2d_residual"] = False
    return _guard(lambda: ModelConfig.model_validate(merged))


def _open_dataset(dataset: str, version: str, seed: int) -> DataRepository:
    """Resolve ``--dataset`` to a repository; missing data exits with code 2."""

    if dataset == MICRO_DATASET:
        return MicroRepository(seed)
    _check_choice("version", version, VERSIONS)
    root = Path(dataset)
    if not root.is_dir():
        typer.echo(f"Error: dataset directory {root} does not exist", err=True)
        raise typer.Exit(EXIT_USAGE)
    resolved: Version = version  # type: ignore[assignment]
    return _guard(lambda: SpeechCommandsRepository.from_directory(root, resolved, seed=seed))


def _load_config(config_path: Optional[Path]) -> AppSettings:
    """Load application settings optionally merging a YAML file."""

    overrides: Dict[str, Any] = {}
    if config_path:
        if not config_path.exists():
            raise typer.BadParameter(f"Config file {config_path} does not exist")
        with config_path.open("r", encoding="utf8") as fh:
            overrides = yaml.safe_load(fh) or {}
    return _guard(lambda: load_settings(**overrides))


__all__ = ["app"]
