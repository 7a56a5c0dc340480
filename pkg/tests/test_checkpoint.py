"""Tests for the checkpoint codec and artifact registry."""

import struct
import zlib

import numpy as np
import pytest

from bcresnet.config.settings import ModelConfig
from bcresnet.core.tensor import ForwardContext
from bcresnet.nn.model import build
from bcresnet.storage.artifacts import ArtifactRegistry
from bcresnet.storage.checkpoint import (
    CheckpointError,
    decode_checkpoint,
    encode_checkpoint,
    ensure_compatible,
    load_checkpoint,
    load_model,
    save_checkpoint,
)


@pytest.fixture(scope="module")
def warmed_model():
    """tau=1 model whose running statistics moved away from their defaults."""

    model = build(ModelConfig(tau=1.0), rng=3)
    x = np.random.default_rng(0).standard_normal((4, 1, 40, 98)).astype(np.float32)
    model.forward(x, ForwardContext(training=True))
    return model


def resign(payload: bytes) -> bytes:
    """Replace the trailing CRC so edits reach the later validation steps."""

    body = payload[:-4]
    return body + struct.pack("<I", zlib.crc32(body))


def test_round_trip_reproduces_eval_outputs(tmp_path, warmed_model):
    """A loaded model gives bitwise identical logits."""

    path = save_checkpoint(warmed_model, tmp_path / "ckpt" / "model.bcrk", step=7)
    restored, checkpoint = load_model(path, expected=ModelConfig(tau=1.0))
    x = np.random.default_rng(1).standard_normal((2, 1, 40, 98)).astype(np.float32)
    before = warmed_model.forward(x, ForwardContext(training=False))
    after = restored.forward(x, ForwardContext(training=False))
    assert np.array_equal(before, after)
    assert checkpoint.step == 7
    assert not (tmp_path / "ckpt" / "model.bcrk.tmp").exists()


def test_round_trip_keeps_running_statistics(warmed_model):
    """Buffers survive encoding alongside parameters."""

    checkpoint = decode_checkpoint(encode_checkpoint(warmed_model, metadata={"seed": 3}))
    state = warmed_model.state_dict()
    assert checkpoint.state.keys() == state.keys()
    assert np.array_equal(checkpoint.state["stem.bn.running_mean"], state["stem.bn.running_mean"])
    assert checkpoint.metadata == {"seed": 3}


def test_truncated_file_fails_checksum(tmp_path, warmed_model):
    """Cutting the file short is reported as a checksum failure."""

    path = save_checkpoint(warmed_model, tmp_path / "model.bcrk")
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(CheckpointError, match="checksum"):
        load_checkpoint(path)


def test_flipped_byte_fails_checksum(warmed_model):
    """Any corruption of the body is caught."""

    payload = bytearray(encode_checkpoint(warmed_model))
    payload[len(payload) // 2] ^= 0xFF
    with pytest.raises(CheckpointError, match="checksum"):
        decode_checkpoint(bytes(payload))


def test_wrong_magic_is_rejected(warmed_model):
    """Files that do not start with the magic are not checkpoints."""

    payload = b"NOPE" + encode_checkpoint(warmed_model)[4:]
    with pytest.raises(CheckpointError, match="not a checkpoint"):
        decode_checkpoint(payload)


def test_unknown_version_is_rejected(warmed_model):
    """A correctly signed file with another format version is refused."""

    payload = encode_checkpoint(warmed_model)
    payload = resign(payload[:4] + struct.pack("<I", 99) + payload[8:])
    with pytest.raises(CheckpointError, match="version 99"):
        decode_checkpoint(payload)


def test_tau_mismatch_is_rejected(tmp_path, warmed_model):
    """Loading into another width names the differing field."""

    path = save_checkpoint(warmed_model, tmp_path / "model.bcrk")
    with pytest.raises(CheckpointError, match="tau"):
        load_checkpoint(path, expected=ModelConfig(tau=2.0))


def test_frames_do_not_affect_compatibility():
    """The input width is not part of the architecture."""

    ensure_compatible(ModelConfig(frames=98), ModelConfig(frames=100), source="x")
    with pytest.raises(CheckpointError, match="configuration mismatch"):
        ensure_compatible(ModelConfig(), ModelConfig(norm_mode="bn"), source="x")


def test_missing_file_is_a_checkpoint_error(tmp_path):
    """Unreadable paths are reported through the same error type."""

    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(tmp_path / "absent.bcrk")


def test_artifact_registry_tracks_checksums(tmp_path):
    """Recorded files verify until they change."""

    path = tmp_path / "a.bin"
    path.write_bytes(b"abc")
    registry = ArtifactRegistry()
    artifact = registry.record("weights", path)
    assert "weights" in registry
    assert artifact.verify()
    assert "weights" in registry.summary()
    path.write_bytes(b"abd")
    assert not registry.get("weights").verify()
