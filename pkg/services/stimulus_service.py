from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy import signal

from models.stimulus import StimulusManifest, StimulusTiming, Waveform
from models.triplet import DigitTriplet
from utils.dsp import resample, wav_read
from utils.errors import ClippingAfterGain, MissingAsset
from utils.validators import ValidationError

logger = logging.getLogger(__name__)

# Two-tone digit signatures: low tone by digit % 5, high tone by digit // 5
LOW_TONES_HZ = (650.0, 850.0, 1050.0, 1250.0, 1450.0)
HIGH_TONES_HZ = (2100.0, 2700.0)
DIGIT_SECONDS = 0.3
RAMP_SECONDS = 0.01
# Digital RMS of the masking noise (the fixed 65 dB SPL presentation level)
NOISE_RMS = 0.05
NOISE_BAND_HZ = (100.0, 7000.0)


def digit_signature(digit: int) -> Tuple[float, float]:
    """(low, high) tone frequencies for a digit"""
    return LOW_TONES_HZ[digit % 5], HIGH_TONES_HZ[digit // 5]


def _ramped(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    ramp = min(int(RAMP_SECONDS * sample_rate), len(samples) // 2)
    if ramp > 0:
        window = 0.5 - 0.5 * np.cos(np.linspace(0.0, np.pi, ramp))
        samples = samples.copy()
        samples[:ramp] *= window
        samples[-ramp:] *= window[::-1]
    return samples


def tone_digit(digit: int, sample_rate: int, seconds: float = DIGIT_SECONDS) -> np.ndarray:
    """Unit-amplitude two-tone signature of one digit"""
    low, high = digit_signature(digit)
    t = np.arange(int(round(seconds * sample_rate))) / float(sample_rate)
    tone = 0.5 * np.sin(2 * np.pi * low * t) + 0.5 * np.sin(2 * np.pi * high * t)
    return _ramped(tone, sample_rate)


def shaped_noise(n_samples: int, sample_rate: int, rng: np.random.Generator) -> np.ndarray:
    """Band-limited Gaussian masker normalised to unit RMS"""
    white = rng.standard_normal(n_samples)
    high = min(NOISE_BAND_HZ[1], 0.45 * sample_rate)
    sos = signal.butter(4, [NOISE_BAND_HZ[0], high], btype='bandpass', fs=sample_rate, output='sos')
    noise = signal.sosfilt(sos, white)
    rms = np.sqrt(np.mean(noise ** 2))
    return noise / rms if rms > 0 else noise


@dataclass(frozen=True, eq=False)
class StimulusMix:
    """Scaled components of a stimulus; ``mix`` is exactly speech + noise"""
    speech: np.ndarray
    noise: np.ndarray
    active: np.ndarray
    sample_rate: int
    snr: float

    @property
    def mix(self) -> Waveform:
        return Waveform(samples=self.speech + self.noise, sample_rate=self.sample_rate)

    @property
    def speech_rms(self) -> float:
        return float(np.sqrt(np.mean(self.speech[self.active] ** 2)))

    @property
    def noise_rms(self) -> float:
        return float(np.sqrt(np.mean(self.noise ** 2)))


class StimulusService:
    """Assemble digit triplets in noise from synthetic signatures or recorded material"""

    def __init__(self, manifest: Optional[StimulusManifest] = None, sample_rate: int = 16000,
                 timing: Optional[StimulusTiming] = None):
        self.manifest = manifest
        self.sample_rate = manifest.sample_rate if manifest else sample_rate
        self.timing = timing or (manifest.timing if manifest else StimulusTiming())
        self._assets: Dict[str, np.ndarray] = {}

    @property
    def mode(self) -> str:
        return 'manifest' if self.manifest else 'synthetic'

    def _load_asset(self, relative: str) -> np.ndarray:
        if relative not in self._assets:
            path = self.manifest.resolve(relative)
            try:
                waveform = wav_read(path)
            except MissingAsset:
                logger.error(f"Stimulus asset missing: {path}")
                raise
            if waveform.sample_rate != self.sample_rate:
                waveform = resample(waveform, self.sample_rate)
            self._assets[relative] = waveform.samples
        return self._assets[relative]

    def _digit_samples(self, digit: int) -> np.ndarray:
        if self.manifest is None:
            return tone_digit(digit, self.sample_rate)
        if digit not in self.manifest.digits:
            raise MissingAsset(f"No recording for digit {digit}")
        gain = 10.0 ** (self.manifest.correction(digit) / 20.0)
        return self._load_asset(self.manifest.digits[digit]) * gain

    def _noise_samples(self, n_samples: int, rng: np.random.Generator,
                       token_index: Optional[int]) -> np.ndarray:
        if self.manifest is None:
            return shaped_noise(n_samples, self.sample_rate, rng)

        tokens = self.manifest.noise_tokens
        index = int(rng.integers(len(tokens))) if token_index is None else token_index % len(tokens)
        noise = self._load_asset(tokens[index])
        if len(noise) < n_samples:
            raise ValidationError(
                f"Noise token {tokens[index]} is shorter than the assembled triplet", 'noise_tokens'
            )
        noise = noise[:n_samples]
        rms = np.sqrt(np.mean(noise ** 2))
        return noise / rms if rms > 0 else noise

    def _fit_noise_window(self, speech: np.ndarray, active: np.ndarray,
                          rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Pad or cut the trailing gap so the stimulus lasts noise_min..noise_max seconds

        The cut never reaches into the last digit.
        """
        timing = self.timing
        target = self._segment(rng.uniform(timing.noise_min, timing.noise_max))
        last_digit_end = int(np.flatnonzero(active)[-1]) + 1
        length = max(target, min(len(speech), max(self._segment(timing.noise_max), last_digit_end)))
        if length <= len(speech):
            return speech[:length], active[:length]
        pad = length - len(speech)
        return np.concatenate([speech, np.zeros(pad)]), np.concatenate([active, np.zeros(pad, dtype=bool)])

    def _segment(self, seconds: float) -> int:
        return int(round(seconds * self.sample_rate))

    def assemble(self, triplet: DigitTriplet, snr: float, rng: np.random.Generator,
                 token_index: Optional[int] = None) -> StimulusMix:
        """Concatenate gaps and digits, then scale speech against the masker"""
        timing = self.timing
        jitter = [rng.uniform(-timing.jitter, timing.jitter) for _ in range(4)]
        gaps = (
            timing.leading_gap + jitter[0],
            timing.inter_digit_gap + jitter[1],
            timing.inter_digit_gap + jitter[2],
            timing.trailing_gap + jitter[3],
        )

        pieces = [np.zeros(self._segment(gaps[0]))]
        active = [np.zeros(len(pieces[0]), dtype=bool)]
        for position, digit in enumerate(triplet.digits):
            samples = self._digit_samples(digit)
            pieces.append(samples)
            active.append(np.ones(len(samples), dtype=bool))
            gap = np.zeros(self._segment(gaps[position + 1]))
            pieces.append(gap)
            active.append(np.zeros(len(gap), dtype=bool))

        speech = np.concatenate(pieces)
        active_mask = np.concatenate(active)
        if self.manifest is not None:
            speech, active_mask = self._fit_noise_window(speech, active_mask, rng)

        noise = self._noise_samples(len(speech), rng, token_index)

        speech_rms = np.sqrt(np.mean(speech[active_mask] ** 2))
        speech_gain = NOISE_RMS * 10.0 ** (snr / 20.0) / speech_rms
        stimulus = StimulusMix(
            speech=speech * speech_gain,
            noise=noise * NOISE_RMS,
            active=active_mask,
            sample_rate=self.sample_rate,
            snr=snr,
        )

        peak = float(np.max(np.abs(stimulus.speech + stimulus.noise)))
        if peak > 1.0:
            raise ClippingAfterGain(f"Triplet {triplet} at {snr:+.1f} dB SNR peaks at {peak:.3f} full scale")
        return stimulus

    def synth_triplet(self, triplet: DigitTriplet, snr: float, rng: np.random.Generator,
                      token_index: Optional[int] = None) -> Waveform:
        """Speech+noise mix of a triplet at the given SNR"""
        stimulus = self.assemble(triplet, snr, rng, token_index)
        logger.debug(f"Synthesised {triplet} at {snr:+.1f} dB SNR ({self.mode}, {len(stimulus.speech)} samples)")
        return stimulus.mix

    def synth_response(self, digits: Sequence[int], rng: np.random.Generator, level_rms: float = 0.1,
                       room_snr: Optional[float] = 30.0, leading_burst: bool = False) -> Waveform:
        """Spoken response made of digit signatures

        ``leading_burst`` puts a short noisy burst before the digits that the
        decoder hears as "een", like the breath and click noise that produced
        spurious leading ones in recorded responses.
        """
        gap = self._segment(0.15)
        lead = self._segment(0.2)
        parts = [np.zeros(lead)]
        for digit in digits:
            parts.append(tone_digit(digit, self.sample_rate) * 2.0 * level_rms)
            parts.append(np.zeros(gap))
        parts.append(np.zeros(lead))
        speech = np.concatenate(parts)

        if leading_burst:
            burst = tone_digit(1, self.sample_rate, seconds=0.2) * level_rms
            burst = burst + shaped_noise(len(burst), self.sample_rate, rng) * level_rms * 0.3
            speech = np.concatenate([burst, speech])

        if room_snr is not None:
            speech = speech + shaped_noise(len(speech), self.sample_rate, rng) * level_rms * 10 ** (-room_snr / 20.0)

        return Waveform(samples=np.clip(speech, -1.0, 1.0), sample_rate=self.sample_rate)


def create_stimulus_service(manifest: Optional[StimulusManifest] = None, sample_rate: int = 16000,
                            timing: Optional[StimulusTiming] = None) -> StimulusService:
    """Create stimulus service instance"""
    return StimulusService(manifest=manifest, sample_rate=sample_rate, timing=timing)
