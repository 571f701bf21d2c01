#!/usr/bin/env python3
"""
Tests for stimulus assembly, WAV I/O, resampling, band analysis and audio I/O
"""

import os
import struct
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal
from scipy.io import wavfile

# Add the project root to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from models.stimulus import StimulusManifest, StimulusTiming, Waveform
from models.triplet import DigitTriplet
from services.audio_service import LoopbackAudio, SoundDeviceAudio, create_audio_service
from services.stimulus_service import (
    HIGH_TONES_HZ, LOW_TONES_HZ, NOISE_RMS, StimulusService, create_stimulus_service, digit_signature, tone_digit
)
from utils.dsp import (
    LEVEL_FLOOR_DB, resample, resample_40k_to_16k, third_octave_bands, third_octave_levels, wav_read, wav_write
)
from utils.errors import (
    AudioDeviceError, ClippingAfterGain, MalformedWav, MissingAsset, TooShort, UnsupportedFormat, WrongSampleRate
)
from utils.validators import ValidationError

TRIPLET = DigitTriplet(5, 2, 8)


def _db(ratio):
    return 20.0 * np.log10(ratio)


def _sine(freq, seconds, rate, amplitude=0.5):
    t = np.arange(int(seconds * rate)) / float(rate)
    return amplitude * np.sin(2 * np.pi * freq * t)


def test_digit_signatures_are_unique():
    signatures = [digit_signature(d) for d in range(10)]
    assert len(set(signatures)) == 10
    assert digit_signature(7) == (LOW_TONES_HZ[2], HIGH_TONES_HZ[1])
    assert len(tone_digit(3, 16000)) == 4800


def test_triplet_duration_without_jitter():
    service = StimulusService(timing=StimulusTiming(jitter=0.0))
    waveform = service.synth_triplet(TRIPLET, -5.0, np.random.default_rng(1))
    assert len(waveform.samples) == 35200
    assert waveform.duration == pytest.approx(2.2)


def test_jittered_duration_bounds():
    service = create_stimulus_service()
    for seed in range(20):
        duration = service.synth_triplet(TRIPLET, 0.0, np.random.default_rng(seed)).duration
        assert 2.0 <= duration <= 2.4


def test_snr_zero_equal_rms():
    stimulus = StimulusService().assemble(TRIPLET, 0.0, np.random.default_rng(4))
    assert abs(_db(stimulus.speech_rms / stimulus.noise_rms)) < 0.01
    assert stimulus.noise_rms == pytest.approx(NOISE_RMS)


@settings(max_examples=25, deadline=None)
@given(st.integers(-23, 10), st.integers(0, 2 ** 16))
def test_realised_snr(snr, seed):
    stimulus = StimulusService().assemble(TRIPLET, float(snr), np.random.default_rng(seed))
    assert _db(stimulus.speech_rms / stimulus.noise_rms) == pytest.approx(snr, abs=1e-6)
    assert not stimulus.active[0]
    assert stimulus.active.sum() == 3 * 4800


def test_mix_is_sum_of_components():
    stimulus = StimulusService().assemble(TRIPLET, 3.0, np.random.default_rng(9))
    np.testing.assert_array_equal(stimulus.mix.samples, stimulus.speech + stimulus.noise)


def test_synthesis_is_deterministic():
    service = StimulusService()
    first = service.synth_triplet(TRIPLET, -7.0, np.random.default_rng(12))
    second = service.synth_triplet(TRIPLET, -7.0, np.random.default_rng(12))
    other = service.synth_triplet(TRIPLET, -7.0, np.random.default_rng(13))
    np.testing.assert_array_equal(first.samples, second.samples)
    assert not np.array_equal(first.samples, other.samples)


def test_clipping_is_reported():
    with pytest.raises(ClippingAfterGain):
        StimulusService().synth_triplet(TRIPLET, 40.0, np.random.default_rng(0))


def _write_manifest_assets(tmp_path, noise_seconds=3.5, corrections=None, digit_seconds=0.5, jitter=0.0):
    digits = {}
    for digit in range(10):
        name = f'digit_{digit}.wav'
        wav_write(tmp_path / name, Waveform(tone_digit(digit, 16000, seconds=digit_seconds) * 0.5, 16000))
        digits[str(digit)] = name
    noise = np.random.default_rng(0).standard_normal(int(noise_seconds * 16000)) * 0.1
    wav_write(tmp_path / 'noise_0.wav', Waveform(np.clip(noise, -1, 1), 16000))
    data = {
        'sample_rate': 16000,
        'digits': digits,
        'corrections_db': corrections or {},
        'noise_tokens': ['noise_0.wav'],
        'timing': {'jitter': jitter},
    }
    return StimulusManifest.from_dict(data, base_dir=str(tmp_path))


def test_manifest_mode_with_level_corrections(tmp_path):
    manifest = _write_manifest_assets(tmp_path, corrections={'1': 6.0})
    service = StimulusService(manifest)
    assert service.mode == 'manifest'

    stimulus = service.assemble(DigitTriplet(1, 2, 3), -3.0, np.random.default_rng(0))
    assert 44800 <= len(stimulus.speech) <= 49600
    assert len(stimulus.noise) == len(stimulus.speech)
    assert stimulus.noise_rms == pytest.approx(NOISE_RMS)

    first = stimulus.speech[8000:16000]
    second = stimulus.speech[18400:26400]
    level_difference = _db(np.sqrt(np.mean(first ** 2)) / np.sqrt(np.mean(second ** 2)))
    assert level_difference == pytest.approx(6.0, abs=0.2)


@pytest.mark.parametrize('digit_seconds', [0.5, 0.55, 0.6])
def test_manifest_durations_within_noise_window(tmp_path, digit_seconds):
    manifest = _write_manifest_assets(tmp_path, digit_seconds=digit_seconds, jitter=0.05)
    service = StimulusService(manifest)
    for seed in range(1000):
        stimulus = service.assemble(TRIPLET, 0.0, np.random.default_rng(seed))
        duration = len(stimulus.speech) / 16000.0
        assert 2.8 <= duration <= 3.1
        assert stimulus.active.sum() == 3 * int(round(digit_seconds * 16000))


def test_manifest_short_noise_token(tmp_path):
    manifest = _write_manifest_assets(tmp_path, noise_seconds=2.0)
    with pytest.raises(ValidationError):
        StimulusService(manifest).synth_triplet(TRIPLET, 0.0, np.random.default_rng(0))


def test_manifest_missing_asset(tmp_path):
    manifest = _write_manifest_assets(tmp_path)
    (tmp_path / 'digit_5.wav').unlink()
    with pytest.raises(MissingAsset):
        StimulusService(manifest).synth_triplet(TRIPLET, 0.0, np.random.default_rng(0))


def test_manifest_validation():
    with pytest.raises(ValidationError):
        StimulusManifest.from_dict({'sample_rate': 16000, 'digits': {'0': 'a.wav'}, 'noise_tokens': ['n.wav']})
    with pytest.raises(ValidationError):
        StimulusManifest.from_dict({
            'sample_rate': 22050,
            'digits': {str(d): f'{d}.wav' for d in range(10)},
            'noise_tokens': ['n.wav'],
        })


def test_waveform_validation():
    with pytest.raises(ValidationError):
        Waveform(np.zeros((10, 2)), 16000)
    with pytest.raises(ValidationError):
        Waveform(np.zeros(10), 22050)
    with pytest.raises(ValidationError):
        Waveform(np.array([0.0, 1.2, -0.3]), 16000)
    with pytest.raises(ValidationError):
        Waveform(np.array([0.0, np.nan]), 16000)
    assert Waveform(np.array([1.0, -1.0]), 16000).peak == 1.0
    assert len(Waveform.silence(0.5).samples) == 8000


def test_resampler_output_stays_in_full_scale():
    square = np.sign(_sine(1000.0, 0.5, 40000, amplitude=1.0))
    output = resample_40k_to_16k(Waveform(square, 40000))
    assert output.peak <= 1.0


def test_wav_round_trip(tmp_path):
    original = Waveform(_sine(440.0, 1.0, 16000, amplitude=0.9), 16000)
    loaded = wav_read(wav_write(tmp_path / 'sine.wav', original))
    assert loaded.sample_rate == 16000
    assert np.max(np.abs(loaded.samples - original.samples)) <= 2 ** -15


def test_wav_errors(tmp_path):
    with pytest.raises(MissingAsset):
        wav_read(tmp_path / 'absent.wav')

    truncated = tmp_path / 'truncated.wav'
    truncated.write_bytes(b'RIFF\x24\x00')
    with pytest.raises(MalformedWav):
        wav_read(truncated)

    cut = tmp_path / 'cut.wav'
    wav_write(cut, Waveform(_sine(440.0, 0.1, 16000), 16000))
    cut.write_bytes(cut.read_bytes()[:-100])
    with pytest.raises(MalformedWav):
        wav_read(cut)

    stereo = tmp_path / 'stereo.wav'
    wavfile.write(stereo, 16000, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(UnsupportedFormat):
        wav_read(stereo)


def test_24_bit_wav_is_unsupported(tmp_path):
    data = bytes(300)
    fmt = struct.pack('<HHIIHH', 1, 1, 16000, 16000 * 3, 3, 24)
    body = b'WAVE' + b'fmt ' + struct.pack('<I', len(fmt)) + fmt + b'data' + struct.pack('<I', len(data)) + data
    path = tmp_path / 'deep.wav'
    path.write_bytes(b'RIFF' + struct.pack('<I', len(body)) + body)
    with pytest.raises(UnsupportedFormat):
        wav_read(path)


def test_resampler_preserves_dc():
    output = resample_40k_to_16k(Waveform(np.full(5000, 0.5), 40000))
    assert output.sample_rate == 16000
    assert len(output.samples) == 2000
    np.testing.assert_allclose(output.samples[50:-50], 0.5, rtol=1e-3)


def test_resampler_length_law():
    for n in (998, 4999, 5001, 12345):
        output = resample_40k_to_16k(Waveform(np.zeros(n), 40000))
        assert len(output.samples) == int(np.ceil(n * 2 / 5))


def test_resampler_passband_tone():
    taper = signal.windows.tukey(40000, 0.1)
    output = resample_40k_to_16k(Waveform(_sine(1000.0, 1.0, 40000) * taper, 40000))
    ideal = _sine(1000.0, 1.0, 16000) * signal.windows.tukey(16000, 0.1)
    correlation = np.dot(output.samples, ideal) / (np.linalg.norm(output.samples) * np.linalg.norm(ideal))
    assert correlation > 0.999


def test_resampler_stopband():
    taper = signal.windows.tukey(40000, 0.1)
    source = Waveform(_sine(10000.0, 1.0, 40000) * taper, 40000)
    output = resample_40k_to_16k(source)
    assert _db(output.rms / source.rms) <= -60.0


def _resampled_tone(freq):
    """Steady-state part of a 0.5 amplitude tone taken from 40 kHz to 16 kHz"""
    output = resample_40k_to_16k(Waveform(_sine(freq, 1.0, 40000), 40000))
    return output.samples[2000:-2000], np.arange(2000, len(output.samples) - 2000) / 16000.0


def test_resampler_passband_sweep():
    for freq in np.linspace(100.0, 6400.0, 43):
        samples, t = _resampled_tone(freq)
        basis = np.column_stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)])
        coefficients = np.linalg.lstsq(basis, samples, rcond=None)[0]
        assert abs(_db(np.hypot(*coefficients) / 0.5)) <= 0.1, f'{freq:.0f} Hz'


def test_resampler_stopband_sweep():
    for freq in np.linspace(8000.0, 19900.0, 35):
        samples, _ = _resampled_tone(freq)
        residual = np.sqrt(np.mean(samples ** 2))
        assert _db(residual / (0.5 / np.sqrt(2))) <= -70.0, f'{freq:.0f} Hz'


def test_resampler_rejects_other_rates():
    with pytest.raises(WrongSampleRate):
        resample_40k_to_16k(Waveform(np.zeros(100), 48000))
    same = Waveform(np.zeros(100), 16000)
    assert resample(same, 16000) is same


def test_third_octave_white_noise_slope():
    rate = 48000
    per_seed = []
    for seed in range(10):
        noise = np.random.default_rng(seed).standard_normal(4 * rate) * 0.1
        per_seed.append(third_octave_levels(Waveform(noise, rate)))
    centres = [c for c in per_seed[0] if c >= 500.0]
    mean_levels = [np.mean([levels[c] for levels in per_seed]) for c in centres]
    increments = np.diff(mean_levels)
    assert len(increments) >= 10
    np.testing.assert_allclose(increments, 1.0, atol=0.3)


def test_third_octave_tone_concentration():
    tone = Waveform(_sine(1000.0, 1.0, 16000), 16000)
    levels = third_octave_levels(tone)
    total = np.mean(tone.samples ** 2)
    assert 10 ** (levels[1000.0] / 10) / total >= 0.99
    assert max(levels, key=levels.get) == 1000.0


def test_third_octave_band_limits():
    bands = third_octave_bands(16000)
    assert min(bands) == 50.0
    assert max(bands) <= 0.9 * 8000
    assert max(third_octave_bands(48000)) == 16000.0


def test_third_octave_total_power():
    rate = 48000
    sos = signal.butter(8, [50.0, 14400.0], btype='bandpass', fs=rate, output='sos')
    noise = signal.sosfilt(sos, np.random.default_rng(5).standard_normal(2 * rate)) * 0.1
    levels = third_octave_levels(Waveform(noise, rate))
    band_total = sum(10 ** (level / 10) for level in levels.values())
    assert abs(10 * np.log10(band_total / np.mean(noise ** 2))) <= 0.5


def test_third_octave_silence_and_short_input():
    levels = third_octave_levels(Waveform.silence(1.0))
    assert set(levels.values()) == {LEVEL_FLOOR_DB}
    with pytest.raises(TooShort):
        third_octave_levels(Waveform.silence(0.2))


def test_loopback_audio():
    audio = create_audio_service('loopback')
    assert isinstance(audio, LoopbackAudio)
    assert len(audio.record(1.5).samples) == 24000

    stimulus = Waveform(_sine(500.0, 0.5, 16000), 16000)
    audio.play(stimulus)
    assert audio.record(1.0) is stimulus

    audio.play(Waveform(np.zeros(40000), 40000))
    assert audio.record(1.0).sample_rate == 16000


class _FakeSoundDevice:
    """Records calls in place of the sounddevice module"""

    def __init__(self, fail=False):
        self.fail = fail
        self.played = None

    def play(self, data, samplerate, device=None):
        if self.fail:
            raise RuntimeError('no output device')
        self.played = (data, samplerate)

    def rec(self, frames, samplerate, channels, dtype, device=None):
        if self.fail:
            raise RuntimeError('no input device')
        return np.full((frames, channels), 0.25)

    def wait(self):
        pass


def test_sound_device_audio(monkeypatch):
    fake = _FakeSoundDevice()
    monkeypatch.setitem(sys.modules, 'sounddevice', fake)
    audio = create_audio_service('device', record_rate=40000, output_rate=16000)
    assert isinstance(audio, SoundDeviceAudio)

    audio.play(Waveform(np.full(100, 0.1), 16000))
    played, rate = fake.played
    assert rate == 16000
    assert played.shape == (100, 2)

    recording = audio.record(0.5)
    assert recording.sample_rate == 16000
    assert len(recording.samples) == 8000


def test_sound_device_failures(monkeypatch):
    monkeypatch.setitem(sys.modules, 'sounddevice', _FakeSoundDevice(fail=True))
    audio = SoundDeviceAudio()
    with pytest.raises(AudioDeviceError):
        audio.play(Waveform(np.zeros(10), 16000))
    with pytest.raises(AudioDeviceError):
        audio.record(0.1)
