"""Tests for the schedule, loss, metrics and the training loop."""

import json

import numpy as np
import pytest

from bcresnet.config.settings import ModelConfig, ScheduleConfig, TrainSettings
from bcresnet.core.optim import SGD
from bcresnet.core.tensor import ConfigurationError, ForwardContext
from bcresnet.data.loader import FeaturePipeline, batches
from bcresnet.data.repositories import MicroRepository
from bcresnet.nn.model import build
from bcresnet.storage.checkpoint import load_checkpoint
from bcresnet.training import trainer as trainer_module
from bcresnet.training.loss import accuracy, cross_entropy
from bcresnet.training.metrics import (
    METRICS_COLUMNS,
    EpochMetrics,
    generate_report,
    read_metrics,
)
from bcresnet.training.schedule import lr_at
from bcresnet.training.trainer import (
    DIVERGENCE_FILE,
    FINAL_CHECKPOINT,
    METRICS_FILE,
    TrainingDivergedError,
    evaluate,
    train,
)


@pytest.fixture(scope="module")
def micro():
    return MicroRepository(seed=0)


@pytest.mark.parametrize(
    "progress, expected",
    [(0.0, 0.0), (2.5, 0.05), (5.0, 0.1), (102.5, 0.05), (200.0, 0.0)],
)
def test_lr_schedule_values(progress, expected):
    """Linear warmup to 0.1 over five epochs, then cosine to zero at 200."""

    assert lr_at(progress, ScheduleConfig()) == pytest.approx(expected, abs=1e-12)


def test_lr_schedule_rejects_out_of_range_progress():
    """Progress beyond the schedule is a configuration error."""

    with pytest.raises(ConfigurationError):
        lr_at(200.5, ScheduleConfig())


def test_short_runs_scale_the_schedule():
    """A 20-epoch run keeps the warmup fraction of the 200-epoch recipe."""

    schedule = TrainSettings(epochs=20).effective_schedule()
    assert schedule.total_epochs == 20
    assert schedule.warmup_epochs == pytest.approx(0.5)
    assert TrainSettings().effective_schedule() == ScheduleConfig()


def test_cross_entropy_of_uniform_logits():
    """Equal logits over four classes cost ln 4."""

    loss, grad = cross_entropy(np.zeros((2, 4)), np.array([0, 3]))
    assert loss == pytest.approx(np.log(4.0))
    np.testing.assert_allclose(grad[0], [-0.375, 0.125, 0.125, 0.125])


def test_cross_entropy_gradient_matches_finite_differences():
    """The analytic gradient agrees with central differences."""

    rng = np.random.default_rng(0)
    logits = rng.standard_normal((3, 5))
    labels = np.array([1, 4, 0])
    _, grad = cross_entropy(logits, labels)
    numeric = np.zeros_like(logits)
    step = 1e-6
    for index in np.ndindex(logits.shape):
        plus, minus = logits.copy(), logits.copy()
        plus[index] += step
        minus[index] -= step
        numeric[index] = (
            cross_entropy(plus, labels)[0] - cross_entropy(minus, labels)[0]
        ) / (2 * step)
    assert np.max(np.abs(grad - numeric)) < 1e-6


def test_cross_entropy_validates_labels():
    """Out-of-range labels are rejected."""

    with pytest.raises(ConfigurationError):
        cross_entropy(np.zeros((2, 3)), np.array([0, 3]))


def test_accuracy_breaks_ties_to_lowest_index():
    """argmax ties resolve to the first class."""

    assert accuracy(np.zeros((2, 3)), np.array([0, 1])) == 0.5


def test_loss_decreases_on_a_fixed_batch(micro):
    """Ten SGD steps on one batch lower its training loss."""

    model = build(ModelConfig(tau=1.0, n_classes=4, dropout_p=0.0), rng=0)
    specs, labels = next(batches(micro.examples("train")[::6], FeaturePipeline(micro)))
    optimizer = SGD.create(model.parameters(), momentum=0.9, weight_decay=0.0)
    losses = []
    for _ in range(10):
        model.zero_grad()
        loss, grad = cross_entropy(model.forward(specs, ForwardContext(training=True)), labels)
        model.backward(grad)
        optimizer.step(0.05)
        losses.append(loss)
    assert losses[-1] < losses[0]


def test_zero_epochs_writes_initialized_model(tmp_path, micro):
    """epochs=0 saves the untouched model and no metrics."""

    model = build(ModelConfig(n_classes=4), rng=1)
    result = train(model, micro, TrainSettings(epochs=0), output_dir=tmp_path)
    assert result.steps == 0
    assert (tmp_path / FINAL_CHECKPOINT).exists()
    assert not (tmp_path / METRICS_FILE).exists()
    restored = load_checkpoint(tmp_path / FINAL_CHECKPOINT).to_model()
    assert np.array_equal(restored.flat_parameters(), model.flat_parameters())


def test_untrained_model_scores_near_chance(micro):
    """Four balanced classes put an untrained model around 25%."""

    acc = evaluate(build(ModelConfig(n_classes=4), rng=0), micro, "test")
    assert 0.05 <= acc <= 0.5


def test_training_run_is_reproducible(tmp_path, micro):
    """Two runs with the same seed write identical metrics and checkpoints."""

    settings = TrainSettings(epochs=1, seed=11, deterministic=True)
    outputs = []
    for name in ("a", "b"):
        model = build(ModelConfig(n_classes=4), rng=11)
        result = train(model, micro, settings, output_dir=tmp_path / name)
        outputs.append(tmp_path / name)
    assert result.steps == 2
    assert len(result.history) == 1
    a, b = outputs
    assert (a / METRICS_FILE).read_bytes() == (b / METRICS_FILE).read_bytes()
    assert (a / FINAL_CHECKPOINT).read_bytes() == (b / FINAL_CHECKPOINT).read_bytes()
    frame = read_metrics(a / METRICS_FILE)
    assert list(frame.columns) == METRICS_COLUMNS
    assert frame["wall_time_s"].tolist() == [0.0]
    assert "best" in result.artifacts and "metrics" in result.artifacts


def test_non_finite_loss_stops_training(tmp_path, micro, monkeypatch):
    """A NaN loss raises and leaves a diagnostic dump."""

    def exploding(logits, labels):
        return float("nan"), np.zeros_like(logits)

    monkeypatch.setattr(trainer_module, "cross_entropy", exploding)
    model = build(ModelConfig(n_classes=4), rng=0)
    with pytest.raises(TrainingDivergedError) as info:
        train(model, micro, TrainSettings(epochs=1), output_dir=tmp_path)
    assert info.value.epoch == 1 and info.value.batch_index == 0
    dump = json.loads((tmp_path / DIVERGENCE_FILE).read_text())
    assert dump["loss"] == "nan"
    assert len(dump["labels"]) == 100


def test_report_prefers_later_epoch_on_ties():
    """The best epoch is the last one reaching the top validation accuracy."""

    history = [
        EpochMetrics(1, 0.1, 1.0, 0.5, 0.8, 0.0),
        EpochMetrics(2, 0.1, 0.8, 0.6, 0.8, 0.0),
        EpochMetrics(3, 0.1, 0.7, 0.7, 0.6, 0.0),
    ]
    report = generate_report(history)
    assert report.best_epoch == 2
    assert report.final_train_acc == 0.7
    assert generate_report([]).epochs == 0


def test_read_metrics_of_missing_file(tmp_path):
    """An absent log reads as an empty frame with the standard columns."""

    assert list(read_metrics(tmp_path / "none.jsonl").columns) == METRICS_COLUMNS
