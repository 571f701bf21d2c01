"""Signal processing for stimuli and recorded responses.

WAV I/O (16-bit PCM mono), anti-aliased polyphase resampling and the
third-octave band analyzer used for digital calibration checks.
"""
import logging
import struct
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
from scipy import signal
from scipy.io import wavfile

from models.stimulus import Waveform
from utils.errors import MalformedWav, MissingAsset, TooShort, UnsupportedFormat, WrongSampleRate

logger = logging.getLogger(__name__)

PCM_SCALE = 32767.0
LEVEL_FLOOR_DB = -120.0
MIN_ANALYSIS_SECONDS = 0.5

# Base-ten third-octave bands: exact centre = 1000 * 10**(k/10)
NOMINAL_BAND_CENTERS = {
    -13: 50.0, -12: 63.0, -11: 80.0, -10: 100.0, -9: 125.0, -8: 160.0,
    -7: 200.0, -6: 250.0, -5: 315.0, -4: 400.0, -3: 500.0, -2: 630.0,
    -1: 800.0, 0: 1000.0, 1: 1250.0, 2: 1600.0, 3: 2000.0, 4: 2500.0,
    5: 3150.0, 6: 4000.0, 7: 5000.0, 8: 6300.0, 9: 8000.0, 10: 10000.0,
    11: 12500.0, 12: 16000.0,
}


def _inspect_header(raw: bytes) -> Tuple[int, int, int, int]:
    """Walk RIFF chunks; return (format tag, channels, rate, bits per sample)"""
    if len(raw) < 12 or raw[:4] != b'RIFF' or raw[8:12] != b'WAVE':
        raise MalformedWav("Missing RIFF/WAVE header")

    offset = 12
    fmt = None
    has_data = False
    while offset + 8 <= len(raw):
        chunk_id = raw[offset:offset + 4]
        (size,) = struct.unpack('<I', raw[offset + 4:offset + 8])
        body = raw[offset + 8:offset + 8 + size]
        if chunk_id == b'fmt ':
            if len(body) < 16:
                raise MalformedWav("Truncated fmt chunk")
            tag, channels, rate, _, _, bits = struct.unpack('<HHIIHH', body[:16])
            if tag == 0xFFFE and len(body) >= 26:
                (tag,) = struct.unpack('<H', body[24:26])
            fmt = (tag, channels, rate, bits)
        elif chunk_id == b'data':
            if len(body) < size:
                raise MalformedWav("Truncated data chunk")
            has_data = True
        offset += 8 + size + (size & 1)

    if fmt is None or not has_data:
        raise MalformedWav("WAV file lacks fmt or data chunk")
    return fmt


def wav_read(path: Union[str, Path]) -> Waveform:
    """Read a 16-bit PCM mono WAV file"""
    path = Path(path)
    if not path.exists():
        raise MissingAsset(f"Audio file not found: {path}")

    raw = path.read_bytes()
    tag, channels, rate, bits = _inspect_header(raw)

    if tag != 1 or bits != 16:
        raise UnsupportedFormat(f"{path.name}: only 16-bit PCM is supported (tag={tag}, bits={bits})")
    if channels != 1:
        raise UnsupportedFormat(f"{path.name}: only mono audio is supported ({channels} channels)")

    try:
        rate, data = wavfile.read(path)
    except (ValueError, EOFError, struct.error) as e:
        raise MalformedWav(f"{path.name}: {e}")

    samples = np.clip(data.astype(np.float64) / PCM_SCALE, -1.0, 1.0)
    logger.debug(f"Read {path} ({len(samples)} samples at {rate} Hz)")
    return Waveform(samples=samples, sample_rate=int(rate))


def wav_write(path: Union[str, Path], waveform: Waveform) -> Path:
    """Write a waveform as 16-bit PCM mono WAV"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(waveform.samples * PCM_SCALE), -PCM_SCALE, PCM_SCALE).astype(np.int16)
    wavfile.write(path, waveform.sample_rate, pcm)
    logger.debug(f"Wrote {path} ({len(pcm)} samples at {waveform.sample_rate} Hz)")
    return path


@lru_cache(maxsize=None)
def _anti_alias_filter(up: int, down: int, input_rate: int, attenuation_db: float = 70.0) -> np.ndarray:
    """Kaiser-window low-pass for the upsampled rate

    Passband edge at 80% of the output Nyquist frequency, stopband from the
    output Nyquist frequency on.
    """
    output_nyquist = input_rate * up / down / 2.0
    passband = 0.8 * output_nyquist
    stopband = output_nyquist
    nyquist = input_rate * up / 2.0

    numtaps, beta = signal.kaiserord(attenuation_db, (stopband - passband) / nyquist)
    numtaps |= 1
    cutoff = (passband + stopband) / 2.0 / nyquist
    return signal.firwin(numtaps, cutoff, window=('kaiser', beta))


def resample(waveform: Waveform, target_rate: int) -> Waveform:
    """Rational polyphase resampling with the anti-alias filter above, clipped to full scale"""
    if waveform.sample_rate == target_rate:
        return waveform

    ratio = Fraction(target_rate, waveform.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    taps = _anti_alias_filter(up, down, waveform.sample_rate)
    samples = signal.resample_poly(waveform.samples, up, down, window=taps, padtype='line')
    return Waveform(samples=np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0), sample_rate=target_rate)


def resample_40k_to_16k(waveform: Waveform) -> Waveform:
    """Down-sample a 40 kHz recording to the 16 kHz the ASR expects"""
    if waveform.sample_rate != 40000:
        raise WrongSampleRate(f"Expected 40000 Hz input, got {waveform.sample_rate} Hz")
    return resample(waveform, 16000)


def third_octave_bands(sample_rate: int) -> Dict[float, Tuple[float, float]]:
    """Analyzable bands for a sample rate: nominal centre -> (low edge, high edge)"""
    nyquist = sample_rate / 2.0
    limit = min(16000.0, 0.9 * nyquist)
    bands = {}
    for k, nominal in NOMINAL_BAND_CENTERS.items():
        exact = 1000.0 * 10 ** (k / 10.0)
        low, high = exact * 10 ** (-0.05), exact * 10 ** 0.05
        if nominal <= limit and high <= nyquist:
            bands[nominal] = (low, high)
    return bands


def power_spectrum(samples: np.ndarray, sample_rate: int) -> Tuple[np.ndarray, np.ndarray]:
    """One-sided power spectrum whose bins sum to the mean-square value"""
    n = len(samples)
    power = np.abs(np.fft.rfft(samples)) ** 2 / float(n * n)
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    return freqs, power


def third_octave_levels(waveform: Waveform, floor_db: float = LEVEL_FLOOR_DB) -> Dict[float, float]:
    """Band levels in dB relative to digital full scale (unit mean square)"""
    if waveform.duration < MIN_ANALYSIS_SECONDS:
        raise TooShort(f"Need at least {MIN_ANALYSIS_SECONDS} s of audio, got {waveform.duration:.3f} s")

    freqs, power = power_spectrum(waveform.samples, waveform.sample_rate)

    levels = {}
    for center, (low, high) in third_octave_bands(waveform.sample_rate).items():
        band_power = float(np.sum(power[(freqs >= low) & (freqs < high)]))
        level = 10.0 * np.log10(band_power) if band_power > 0 else floor_db
        levels[center] = max(float(level), floor_db)
    return levels
