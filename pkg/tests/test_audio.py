"""Tests for the log-Mel frontend, augmentations and audio IO."""

import logging
import struct

import numpy as np
import pytest
from scipy.io import wavfile

from bcresnet.audio.augment import (
    Mask,
    apply_masks,
    draw_masks,
    mix_background,
    spec_augment,
    time_shift,
)
from bcresnet.audio.features import (
    CLIP_SAMPLES,
    LOG_FLOOR,
    NUM_FRAMES,
    AudioFormatError,
    LogMelSpec,
    Waveform,
    analysis_window,
    log_mel,
    magnitude_frames,
    mel_centers,
    mel_filterbank,
)
from bcresnet.audio.io import read_featdump, read_wav, write_featdump, write_wav
from bcresnet.core.tensor import ConfigurationError


def ramp() -> Waveform:
    """Distinct nonzero samples so displacements are easy to verify."""

    return Waveform(np.linspace(0.1, 0.9, CLIP_SAMPLES, dtype=np.float32))


def test_log_mel_shape_is_40_by_98():
    """One second at 30 ms / 10 ms framing yields 98 frames."""

    spec = log_mel(ramp())
    assert NUM_FRAMES == 98
    assert spec.shape == (40, 98)
    assert spec.values.dtype == np.float32


def test_magnitude_frames_match_windowed_fft():
    """Frame i is the Hann-windowed slice starting at 160 * i, zero padded to 512."""

    samples = np.random.default_rng(0).uniform(-1, 1, CLIP_SAMPLES)
    spectra = magnitude_frames(samples)
    assert spectra.shape == (NUM_FRAMES, 257)
    for index in (0, 1, 50, NUM_FRAMES - 1):
        start = 160 * index
        frame = samples[start : start + 480] * analysis_window()
        expected = np.abs(np.fft.rfft(frame, n=512))
        np.testing.assert_allclose(spectra[index], expected, rtol=1e-9, atol=1e-9)
    with pytest.raises(AudioFormatError):
        magnitude_frames(np.zeros(100))


def test_log_mel_of_silence_is_constant_floor():
    """All-zero audio maps every cell to log(floor)."""

    spec = log_mel(Waveform.silence())
    assert np.all(spec.values == np.float32(np.log(LOG_FLOOR)))


def test_log_mel_of_1khz_sine_peaks_at_nearest_filter():
    """The strongest Mel bin of a 1 kHz tone is the filter centered nearest 1 kHz."""

    t = np.arange(CLIP_SAMPLES) / 16_000
    spec = log_mel(Waveform((0.5 * np.sin(2 * np.pi * 1000 * t)).astype(np.float32)))
    peaks = np.argmax(spec.values, axis=0)
    nearest = int(np.argmin(np.abs(mel_centers() - 1000.0)))
    assert np.all(peaks == nearest)
    assert nearest == 13


def test_log_mel_is_deterministic():
    """Identical waveforms give bitwise identical features."""

    noise = np.random.default_rng(0).uniform(-0.5, 0.5, CLIP_SAMPLES).astype(np.float32)
    assert np.array_equal(log_mel(Waveform(noise)).values, log_mel(Waveform(noise)).values)


def test_mel_filterbank_tiles_the_band():
    """Filters are nonnegative, each has positive mass and centers rise from 20 Hz to 8 kHz."""

    bank = mel_filterbank()
    assert bank.shape == (40, 257)
    assert np.all(bank >= 0)
    assert np.all(bank.sum(axis=1) > 0)
    centers = mel_centers()
    assert np.all(np.diff(centers) > 0)
    assert 20.0 < centers[0] < centers[-1] < 8000.0


def test_waveform_padding_and_validation():
    """Short clips are zero-padded; empty clips and wrong rates are rejected."""

    short = Waveform.from_samples(np.ones(100))
    assert short.samples.size == CLIP_SAMPLES
    assert np.all(short.samples[100:] == 0)
    with pytest.raises(AudioFormatError):
        Waveform.from_samples(np.array([]))
    with pytest.raises(AudioFormatError):
        Waveform(np.zeros(CLIP_SAMPLES, dtype=np.float32), sample_rate=8000)


def test_time_shift_zero_is_identity():
    """A zero shift copies the samples."""

    wave = ramp()
    assert np.array_equal(time_shift(wave, 0).samples, wave.samples)


def test_time_shift_delay_zero_fills_the_front():
    """+100 ms leaves 1600 leading zeros followed by the original prefix."""

    wave = ramp()
    shifted = time_shift(wave, 100).samples
    assert np.all(shifted[:1600] == 0)
    assert np.array_equal(shifted[1600:], wave.samples[:-1600])


def test_time_shift_advance_then_delay():
    """-50 ms then +50 ms restores the clip except the first 800 samples."""

    wave = ramp()
    restored = time_shift(time_shift(wave, -50), 50).samples
    assert np.all(restored[:800] == 0)
    assert np.array_equal(restored[800:], wave.samples[800:])


def test_time_shift_rejects_out_of_range():
    """Shifts beyond 100 ms are errors."""

    with pytest.raises(AudioFormatError):
        time_shift(ramp(), 100.5)


def test_mix_background_probability_zero_is_identity():
    """prob=0 never mixes."""

    wave = ramp()
    noise = [np.ones(20_000, dtype=np.float32)]
    assert mix_background(wave, noise, np.random.default_rng(0), prob=0.0) is wave


def test_mix_background_zero_gain_is_identity():
    """A zero gain leaves the waveform untouched."""

    wave = ramp()
    noise = [np.ones(20_000, dtype=np.float32)]
    out = mix_background(wave, noise, np.random.default_rng(0), prob=1.0, gain=0.0)
    assert np.array_equal(out.samples, wave.samples)


def test_mix_background_linear_arithmetic():
    """Silence plus 0.1 x constant noise gives a constant 0.1 clip."""

    noise = [np.ones(20_000, dtype=np.float32)]
    out = mix_background(Waveform.silence(), noise, np.random.default_rng(0), 1.0, gain=0.1)
    assert np.allclose(out.samples, 0.1)
    loud_wave = Waveform(np.full(CLIP_SAMPLES, 0.95, np.float32))
    loud = mix_background(loud_wave, noise, np.random.default_rng(0), 1.0, gain=0.1)
    assert np.all(loud.samples == 1.0)


def test_mix_background_without_clips_warns(caplog):
    """No noise clips: identity with a warning."""

    wave = ramp()
    with caplog.at_level(logging.WARNING):
        out = mix_background(wave, [], np.random.default_rng(0), prob=1.0)
    assert out is wave
    assert "no background noise" in caplog.text


def test_mix_background_rejects_short_clip():
    """Noise clips shorter than one second cannot be cropped."""

    with pytest.raises(AudioFormatError):
        mix_background(ramp(), [np.ones(100, np.float32)], np.random.default_rng(0), 1.0)


def test_spec_augment_disabled_is_identity():
    """F=0 and T=0 return the input."""

    spec = log_mel(ramp())
    assert spec_augment(spec, np.random.default_rng(0), freq_param=0, time_param=0) is spec


def test_full_width_frequency_mask_zeroes_everything():
    """A 40-bin frequency mask blanks the whole spectrogram."""

    spec = LogMelSpec(np.ones((40, 98), dtype=np.float32))
    assert not np.any(apply_masks(spec, [Mask("freq", 0, 40)]).values)


def test_spec_augment_zero_count_matches_drawn_rectangles():
    """Zeroed cells are exactly the union of the two frequency and two time masks."""

    spec = LogMelSpec(np.ones((40, 98), dtype=np.float32))
    masks = draw_masks(spec.shape, np.random.default_rng(3), freq_param=5, time_param=20)
    assert [m.axis for m in masks] == ["freq", "freq", "time", "time"]
    covered = np.zeros(spec.shape, dtype=bool)
    for mask in masks:
        if mask.axis == "freq":
            covered[mask.start : mask.start + mask.width, :] = True
        else:
            covered[:, mask.start : mask.start + mask.width] = True
    out = spec_augment(spec, np.random.default_rng(3), freq_param=5, time_param=20)
    assert out.shape == (40, 98)
    assert np.array_equal(out.values == 0, covered)
    assert np.count_nonzero(out.values) <= np.count_nonzero(spec.values)


def test_draw_masks_rejects_oversized_parameters():
    """F larger than the bin count is a configuration error."""

    with pytest.raises(ConfigurationError):
        draw_masks((40, 98), np.random.default_rng(0), freq_param=41, time_param=20)


def test_read_wav_round_trip(tmp_path):
    """16-bit mono 16 kHz files are read back within PCM resolution."""

    path = write_wav(tmp_path / "a.wav", 0.5 * ramp().samples[:8000])
    wave = read_wav(path)
    assert wave.samples.size == CLIP_SAMPLES
    assert np.allclose(wave.samples[:8000], 0.5 * ramp().samples[:8000], atol=1 / 32768)
    assert np.all(wave.samples[8000:] == 0)


@pytest.mark.parametrize(
    "rate, data, message",
    [
        (8000, np.zeros(8000, dtype=np.int16), "sample rate"),
        (16000, np.zeros((16000, 2), dtype=np.int16), "mono"),
        (16000, np.zeros(16000, dtype=np.float32), "16-bit"),
    ],
)
def test_read_wav_rejects_other_formats(tmp_path, rate, data, message):
    """Wrong rate, channel count or sample format raise descriptive errors."""

    path = tmp_path / "bad.wav"
    wavfile.write(str(path), rate, data)
    with pytest.raises(AudioFormatError, match=message):
        read_wav(path)


def test_featdump_layout(tmp_path):
    """Header is two little-endian u32 (rows, cols) followed by float32 cells."""

    spec = log_mel(ramp())
    path = write_featdump(tmp_path / "feat.bin", spec)
    payload = path.read_bytes()
    assert struct.unpack("<II", payload[:8]) == (40, 98)
    assert len(payload) == 8 + 40 * 98 * 4
    assert np.array_equal(read_featdump(path).values, spec.values)
