"""Binary checkpoint codec.

Layout (all integers little-endian)::

    b"BCRK"          magic
    u32              format version
    u32              header length in bytes
    header           UTF-8 JSON: model config, step, tensor manifest, metadata
    blob             float32 values of every tensor, concatenated
    u32              CRC32 of everything above

The manifest lists ``name``, ``shape``, ``offset`` (in floats) and ``kind``
(``param`` or ``buffer``) for every tensor in model order.
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from pydantic import ValidationError

from ..config.settings import ModelConfig
from ..core.tensor import FloatArray
from ..nn.model import BCResNet, build

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"BCRK"
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct("<4sII")
_CRC = struct.Struct("<I")
_BLOB_DTYPE = np.dtype("<f4")


class CheckpointError(ValueError):
    """Raised for unreadable, corrupted or mismatching checkpoint files."""


@dataclass(slots=True)
class Checkpoint:
    """Decoded checkpoint contents."""

    config: ModelConfig
    """Architecture the tensors belong to."""
    state: Dict[str, FloatArray]
    """Parameters and running statistics keyed by name."""
    step: int = 0
    """Optimizer steps taken when the file was written."""
    metadata: Dict[str, Any] = field(default_factory=dict)
    """Free-form run information (dataset, seed, epoch)."""

    def to_model(self) -> BCResNet:
        """Build a model for :attr:`config` and load :attr:`state` into it."""

        model = build(self.config, 0)
        model.load_state(self.state)
        return model


def encode_checkpoint(
    model: BCResNet, *, step: int = 0, metadata: Optional[Dict[str, Any]] = None
) -> bytes:
    """Serialize ``model`` to the checkpoint byte layout."""

    param_names = {param.name for param in model.parameters()}
    manifest = []
    chunks = []
    offset = 0
    for name, array in model.state_dict().items():
        manifest.append(
            {
                "name": name,
                "shape": list(array.shape),
                "offset": offset,
                "kind": "param" if name in param_names else "buffer",
            }
        )
        chunks.append(np.ascontiguousarray(array, dtype=_BLOB_DTYPE).ravel())
        offset += int(array.size)
    header = {
        "config": model.cfg.model_dump(mode="json"),
        "step": int(step),
        "tensors": manifest,
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = np.concatenate(chunks).tobytes() if chunks else b""
    prefix = _PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(header_bytes))
    body = prefix + header_bytes + blob
    return body + _CRC.pack(zlib.crc32(body))


def decode_checkpoint(payload: bytes, *, source: str = "<bytes>") -> Checkpoint:
    """Parse checkpoint bytes, validating magic, checksum, version and bounds."""

    if len(payload) < _PREFIX.size + _CRC.size:
        msg = f"{source}: checksum failure, file truncated to {len(payload)} bytes"
        raise CheckpointError(msg)
    magic, version, header_len = _PREFIX.unpack_from(payload)
    if magic != CHECKPOINT_MAGIC:
        msg = f"{source}: not a checkpoint (magic {magic!r})"
        raise CheckpointError(msg)
    body, (stored_crc,) = payload[: -_CRC.size], _CRC.unpack(payload[-_CRC.size :])
    actual_crc = zlib.crc32(body)
    if actual_crc != stored_crc:
        msg = (
            f"{source}: checksum failure (stored {stored_crc:#010x}, computed "
            f"{actual_crc:#010x}); the file is truncated or corrupted"
        )
        raise CheckpointError(msg)
    if version != CHECKPOINT_VERSION:
        msg = f"{source}: format version {version} is not supported (expected {CHECKPOINT_VERSION})"
        raise CheckpointError(msg)
    start = _PREFIX.size
    if start + header_len > len(body) or (len(body) - start - header_len) % _BLOB_DTYPE.itemsize:
        msg = f"{source}: header length {header_len} is inconsistent with the file size"
        raise CheckpointError(msg)
    try:
        header = json.loads(body[start : start + header_len].decode("utf-8"))
        config = ModelConfig.model_validate(header["config"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValidationError) as exc:
        msg = f"{source}: malformed header: {exc}"
        raise CheckpointError(msg) from exc
    blob = np.frombuffer(body, dtype=_BLOB_DTYPE, offset=start + header_len)
    state: Dict[str, FloatArray] = {}
    for entry in header.get("tensors", []):
        shape = tuple(int(v) for v in entry["shape"])
        size = int(np.prod(shape, dtype=np.int64))
        offset = int(entry["offset"])
        if offset < 0 or offset + size > blob.size:
            msg = f"{source}: tensor {entry['name']} lies outside the blob"
            raise CheckpointError(msg)
        state[entry["name"]] = blob[offset : offset + size].astype(np.float32).reshape(shape)
    return Checkpoint(
        config=config,
        state=state,
        step=int(header.get("step", 0)),
        metadata=dict(header.get("metadata", {})),
    )


def save_checkpoint(
    model: BCResNet,
    path: Path,
    *,
    step: int = 0,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write ``model`` to ``path`` atomically and return the path."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(encode_checkpoint(model, step=step, metadata=metadata))
    tmp.replace(path)
    logger.info("checkpoint saved path=%s step=%d", path, step)
    return path


def load_checkpoint(path: Path, *, expected: Optional[ModelConfig] = None) -> Checkpoint:
    """Read ``path``; when ``expected`` is given its architecture must match."""

    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as exc:
        msg = f"{path}: cannot read checkpoint: {exc}"
        raise CheckpointError(msg) from exc
    checkpoint = decode_checkpoint(payload, source=str(path))
    if expected is not None:
        ensure_compatible(checkpoint.config, expected, source=str(path))
    return checkpoint


def ensure_compatible(stored: ModelConfig, expected: ModelConfig, *, source: str) -> None:
    """Raise :class:`CheckpointError` listing every architecture field that differs."""

    stored_fields = stored.model_dump()
    expected_fields = expected.model_dump()
    diffs = [
        f"{key}: checkpoint={stored_fields[key]!r} requested={expected_fields[key]!r}"
        for key in stored_fields
        if key != "frames" and stored_fields[key] != expected_fields[key]
    ]
    if diffs:
        msg = f"{source}: configuration mismatch ({'; '.join(diffs)})"
        raise CheckpointError(msg)


def load_model(
    path: Path, *, expected: Optional[ModelConfig] = None
) -> tuple[BCResNet, Checkpoint]:
    """Load ``path`` and return a ready model together with the decoded checkpoint."""

    checkpoint = load_checkpoint(path, expected=expected)
    return checkpoint.to_model(), checkpoint


__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "CheckpointError",
    "decode_checkpoint",
    "encode_checkpoint",
    "ensure_compatible",
    "load_checkpoint",
    "load_model",
    "save_checkpoint",
]
