"""Tests for the command line interface."""

import re
import struct

import numpy as np
import pytest
from typer.testing import CliRunner

from bcresnet import cli
from bcresnet.audio.io import write_wav
from bcresnet.core import functional

runner = CliRunner()


@pytest.fixture(scope="module")
def untrained_checkpoint(tmp_path_factory):
    """Zero-epoch micro run; returns the final checkpoint path."""

    output = tmp_path_factory.mktemp("run")
    result = runner.invoke(
        cli.app, ["train", "--dataset", "micro", "--epochs", "0", "--output", str(output)]
    )
    assert result.exit_code == 0, result.output
    return output / "final.bcrk"


def test_count_prints_totals_for_tau_1():
    """The table ends with the exact totals at W=100."""

    result = runner.invoke(cli.app, ["count", "--tau", "1", "--frames", "100"])
    assert result.exit_code == 0, result.output
    assert "total params=9200 (9.2k) mults=2740000 (2.74M)" in result.output


def test_count_for_tau_8():
    """The widest model has about 321k parameters."""

    result = runner.invoke(cli.app, ["count", "--tau", "8"])
    assert result.exit_code == 0
    assert "params=320812 (320.8k)" in result.output


def test_count_reads_yaml_config(tmp_path):
    """Architecture fields can come from a config file."""

    config = tmp_path / "config.yaml"
    config.write_text("model:\n  frames: 100\n  norm_mode: bn\n")
    result = runner.invoke(cli.app, ["count", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert "W=100" in result.output
    assert "blocks.0.f2.bn" in result.output


@pytest.mark.parametrize(
    "args",
    [
        ["count", "--tau", "0"],
        ["count", "--tau", "-1"],
        ["count", "--reduce-mode", "median"],
        ["count", "--config", "/no/such/config.yaml"],
    ],
)
def test_count_usage_errors_exit_2(args):
    """Invalid widths, variants and config paths are usage errors."""

    assert runner.invoke(cli.app, args).exit_code == 2


def test_gradcheck_passes():
    """All checks pass with the default threshold."""

    result = runner.invoke(cli.app, ["gradcheck", "--seed", "0"])
    assert result.exit_code == 0, result.output
    assert result.output.strip().endswith("all passed")


def test_gradcheck_detects_broken_backward(monkeypatch):
    """A corrupted backward kernel makes the command fail with exit code 1."""

    original = functional.swish_backward
    monkeypatch.setattr(functional, "swish_backward", lambda dy, x: 1.01 * original(dy, x))
    result = runner.invoke(cli.app, ["gradcheck"])
    assert result.exit_code == 1
    assert "FAILED" in result.output


def test_train_zero_epochs_writes_final_checkpoint(untrained_checkpoint):
    """epochs=0 saves the initialized model only."""

    assert untrained_checkpoint.exists()
    assert not (untrained_checkpoint.parent / "best.bcrk").exists()


def test_train_missing_dataset_exits_2(tmp_path):
    """A dataset path that does not exist is an environment error."""

    result = runner.invoke(cli.app, ["train", "--dataset", str(tmp_path / "absent")])
    assert result.exit_code == 2
    assert "does not exist" in result.output


def test_eval_untrained_checkpoint_prints_accuracy(untrained_checkpoint):
    """Evaluation prints the split accuracy."""

    result = runner.invoke(
        cli.app, ["eval", "--checkpoint", str(untrained_checkpoint), "--dataset", "micro"]
    )
    assert result.exit_code == 0, result.output
    match = re.search(r"test accuracy: (\d\.\d{4})", result.output)
    assert match is not None
    assert 0.0 <= float(match.group(1)) <= 1.0


def test_eval_defaults_to_the_training_seed(tmp_path, mocker):
    """Without --seed the micro corpus is rebuilt from the checkpoint's seed."""

    output = tmp_path / "run"
    trained = runner.invoke(
        cli.app,
        ["train", "--dataset", "micro", "--epochs", "0", "--seed", "3", "--output", str(output)],
    )
    assert trained.exit_code == 0, trained.output
    micro = mocker.patch.object(cli, "MicroRepository", wraps=cli.MicroRepository)
    args = ["eval", "--checkpoint", str(output / "final.bcrk"), "--dataset", "micro"]
    assert runner.invoke(cli.app, args).exit_code == 0
    assert runner.invoke(cli.app, [*args, "--seed", "5"]).exit_code == 0
    assert [call.args[0] for call in micro.call_args_list] == [3, 5]


def test_eval_corrupted_checkpoint_exits_2(tmp_path, untrained_checkpoint):
    """A truncated checkpoint is reported as a checksum failure."""

    broken = tmp_path / "broken.bcrk"
    broken.write_bytes(untrained_checkpoint.read_bytes()[:-16])
    result = runner.invoke(cli.app, ["eval", "--checkpoint", str(broken), "--dataset", "micro"])
    assert result.exit_code == 2
    assert "checksum" in result.output


def test_eval_width_mismatch_exits_2(untrained_checkpoint):
    """Requesting another tau than the checkpoint's is refused."""

    result = runner.invoke(
        cli.app,
        ["eval", "--checkpoint", str(untrained_checkpoint), "--dataset", "micro", "--tau", "2"],
    )
    assert result.exit_code == 2
    assert "configuration mismatch" in result.output


def test_featdump_writes_binary_spectrogram(tmp_path):
    """featdump emits the 40x98 header and float32 payload."""

    wav = write_wav(tmp_path / "tone.wav", 0.3 * np.sin(np.arange(16_000) / 3.0))
    out = tmp_path / "feat.bin"
    result = runner.invoke(cli.app, ["featdump", str(wav), str(out)])
    assert result.exit_code == 0, result.output
    payload = out.read_bytes()
    assert struct.unpack("<II", payload[:8]) == (40, 98)
    assert len(payload) == 8 + 40 * 98 * 4


def test_featdump_rejects_non_wav(tmp_path):
    """Unreadable audio is a usage error."""

    bogus = tmp_path / "bogus.wav"
    bogus.write_bytes(b"not audio")
    result = runner.invoke(cli.app, ["featdump", str(bogus), str(tmp_path / "x.bin")])
    assert result.exit_code == 2


def test_manifest_command_exports_csv(tmp_path, make_corpus):
    """The manifest command writes the rebalanced split table."""

    root = make_corpus(tmp_path / "corpus", {"yes": 5, "no": 5, "cat": 7})
    out = tmp_path / "manifest.csv"
    result = runner.invoke(cli.app, ["manifest", str(root), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.read_text().splitlines()[0] == "path,label,split"
    assert "train: " in result.output
