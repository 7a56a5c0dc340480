"""Audio frontend: waveform IO, log-Mel features and augmentations."""

from .augment import (
    Mask,
    apply_masks,
    draw_masks,
    mix_background,
    random_time_shift,
    spec_augment,
    time_shift,
)
from .features import (
    CLIP_SAMPLES,
    NUM_FRAMES,
    SAMPLE_RATE,
    AudioFormatError,
    LogMelSpec,
    Waveform,
    log_mel,
    mel_centers,
    mel_filterbank,
)
from .io import read_featdump, read_pcm, read_wav, write_featdump, write_wav

__all__ = [
    "AudioFormatError",
    "CLIP_SAMPLES",
    "LogMelSpec",
    "Mask",
    "NUM_FRAMES",
    "SAMPLE_RATE",
    "Waveform",
    "apply_masks",
    "draw_masks",
    "log_mel",
    "mel_centers",
    "mel_filterbank",
    "mix_background",
    "random_time_shift",
    "read_featdump",
    "read_pcm",
    "read_wav",
    "spec_augment",
    "time_shift",
    "write_featdump",
    "write_wav",
]
