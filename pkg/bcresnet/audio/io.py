"""WAV reading and the ``featdump`` binary format."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from ..core.tensor import FloatArray
from .features import SAMPLE_RATE, AudioFormatError, LogMelSpec, Waveform

_FEATDUMP_HEADER = struct.Struct("<II")
_PCM_SCALE = 32768.0


def read_pcm(path: Path) -> FloatArray:
    """Read a 16-bit mono 16 kHz WAV of any length as floats in ``[-1, 1)``."""

    try:
        rate, data = wavfile.read(str(path))
    except (OSError, ValueError) as exc:
        msg = f"{path}: unreadable WAV file: {exc}"
        raise AudioFormatError(msg) from exc
    if rate != SAMPLE_RATE:
        msg = f"{path}: sample rate {rate} Hz, expected {SAMPLE_RATE} Hz"
        raise AudioFormatError(msg)
    if data.ndim != 1:
        msg = f"{path}: {data.shape[1]} channels, expected mono"
        raise AudioFormatError(msg)
    if data.dtype != np.int16:
        msg = f"{path}: sample format {data.dtype}, expected 16-bit PCM"
        raise AudioFormatError(msg)
    return (data.astype(np.float32) / _PCM_SCALE).astype(np.float32)


def read_wav(path: Path) -> Waveform:
    """Read ``path`` as a one-second :class:`Waveform` (zero-padded or cut)."""

    samples = read_pcm(path)
    if samples.size == 0:
        msg = f"{path}: WAV file holds no samples"
        raise AudioFormatError(msg)
    return Waveform.from_samples(samples)


def write_wav(path: Path, samples: FloatArray) -> Path:
    """Write float samples in ``[-1, 1]`` as 16-bit mono PCM."""

    pcm = np.clip(np.round(np.asarray(samples) * _PCM_SCALE), -32768, 32767).astype(np.int16)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(str(path), SAMPLE_RATE, pcm)
    return path


def write_featdump(path: Path, spec: LogMelSpec) -> Path:
    """Write ``u32 rows, u32 cols`` then row-major float32, all little-endian."""

    rows, cols = spec.shape
    payload = _FEATDUMP_HEADER.pack(rows, cols) + np.ascontiguousarray(
        spec.values, dtype="<f4"
    ).tobytes()
    path = Path(path)
    path.write_bytes(payload)
    return path


def read_featdump(path: Path) -> LogMelSpec:
    """Inverse of :func:`write_featdump`."""

    payload = Path(path).read_bytes()
    if len(payload) < _FEATDUMP_HEADER.size:
        msg = f"{path}: featdump header truncated"
        raise AudioFormatError(msg)
    rows, cols = _FEATDUMP_HEADER.unpack_from(payload)
    body = payload[_FEATDUMP_HEADER.size :]
    if len(body) != rows * cols * 4:
        msg = f"{path}: expected {rows}x{cols} floats, found {len(body)} bytes"
        raise AudioFormatError(msg)
    values = np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float32)
    return LogMelSpec(values)


__all__ = ["read_featdump", "read_pcm", "read_wav", "write_featdump", "write_wav"]
