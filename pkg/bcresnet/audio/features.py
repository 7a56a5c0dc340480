"""Waveform container and the 40-bin log-Mel frontend."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import librosa
import numpy as np
from scipy.signal import get_window, stft

from ..core.tensor import FloatArray

SAMPLE_RATE = 16_000
CLIP_SAMPLES = 16_000
WIN_LENGTH = 480
"""30 ms analysis window."""
HOP_LENGTH = 160
"""10 ms frame shift."""
N_FFT = 512
N_MELS = 40
FMIN = 20.0
FMAX = 8_000.0
LOG_FLOOR = 1e-6
NUM_FRAMES = 1 + (CLIP_SAMPLES - WIN_LENGTH) // HOP_LENGTH


class AudioFormatError(ValueError):
    """Raised for unsupported audio files or invalid waveform operations."""


@dataclass(slots=True)
class Waveform:
    """One second of mono audio in ``[-1, 1]`` at 16 kHz."""

    samples: FloatArray
    """Exactly :data:`CLIP_SAMPLES` float32 values."""
    sample_rate: int = SAMPLE_RATE
    """Always :data:`SAMPLE_RATE`."""

    def __post_init__(self) -> None:
        if self.sample_rate != SAMPLE_RATE:
            msg = f"Expected {SAMPLE_RATE} Hz audio, got {self.sample_rate} Hz"
            raise AudioFormatError(msg)
        if self.samples.ndim != 1 or self.samples.size != CLIP_SAMPLES:
            msg = f"Waveform must hold {CLIP_SAMPLES} mono samples, got shape {self.samples.shape}"
            raise AudioFormatError(msg)

    @classmethod
    def from_samples(cls, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> "Waveform":
        """Zero-pad (or cut) ``samples`` to one second."""

        data = np.asarray(samples, dtype=np.float32).ravel()
        if data.size == 0:
            msg = "Waveform is empty"
            raise AudioFormatError(msg)
        clip = np.zeros(CLIP_SAMPLES, dtype=np.float32)
        length = min(data.size, CLIP_SAMPLES)
        clip[:length] = data[:length]
        return cls(clip, sample_rate)

    @classmethod
    def silence(cls) -> "Waveform":
        """All-zero clip."""

        return cls(np.zeros(CLIP_SAMPLES, dtype=np.float32))


@dataclass(slots=True)
class LogMelSpec:
    """Log-Mel spectrogram laid out frequency x time."""

    values: FloatArray
    """``(n_mels, frames)`` float32 matrix."""

    @property
    def frames(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])


@lru_cache(maxsize=None)
def mel_filterbank() -> FloatArray:
    """``(N_MELS, N_FFT // 2 + 1)`` triangular HTK-Mel filters over 20 Hz - 8 kHz."""

    bank = librosa.filters.mel(
        sr=SAMPLE_RATE,
        n_fft=N_FFT,
        n_mels=N_MELS,
        fmin=FMIN,
        fmax=FMAX,
        htk=True,
        norm=None,
    )
    bank.setflags(write=False)
    return bank


def mel_centers() -> FloatArray:
    """Center frequency in Hz of every Mel filter."""

    edges = librosa.mel_frequencies(n_mels=N_MELS + 2, fmin=FMIN, fmax=FMAX, htk=True)
    return edges[1:-1]


@lru_cache(maxsize=None)
def analysis_window() -> FloatArray:
    """Periodic Hann window of :data:`WIN_LENGTH` samples."""

    window = get_window("hann", WIN_LENGTH, fftbins=True)
    window.setflags(write=False)
    return window


def magnitude_frames(samples: FloatArray) -> FloatArray:
    """``(frames, N_FFT // 2 + 1)`` magnitude spectra of unpadded frames."""

    if samples.size < WIN_LENGTH:
        msg = f"Need at least {WIN_LENGTH} samples to frame, got {samples.size}"
        raise AudioFormatError(msg)
    window = analysis_window()
    _, _, spectra = stft(
        samples.astype(np.float64),
        fs=SAMPLE_RATE,
        window=window,
        nperseg=WIN_LENGTH,
        noverlap=WIN_LENGTH - HOP_LENGTH,
        nfft=N_FFT,
        detrend=False,
        return_onesided=True,
        boundary=None,
        padded=False,
    )
    # stft divides by the window sum
    return np.abs(spectra).T * window.sum()


def log_mel(waveform: Waveform) -> LogMelSpec:
    """40 x 98 natural-log Mel spectrogram with a :data:`LOG_FLOOR` floor."""

    if waveform.samples.size == 0:
        msg = "Cannot compute features of an empty waveform"
        raise AudioFormatError(msg)
    mel = mel_filterbank() @ magnitude_frames(waveform.samples).T
    return LogMelSpec(np.log(np.maximum(mel, LOG_FLOOR)).astype(np.float32))


__all__ = [
    "AudioFormatError",
    "CLIP_SAMPLES",
    "FMAX",
    "FMIN",
    "HOP_LENGTH",
    "LOG_FLOOR",
    "LogMelSpec",
    "NUM_FRAMES",
    "N_FFT",
    "N_MELS",
    "SAMPLE_RATE",
    "WIN_LENGTH",
    "Waveform",
    "analysis_window",
    "log_mel",
    "magnitude_frames",
    "mel_centers",
    "mel_filterbank",
]
