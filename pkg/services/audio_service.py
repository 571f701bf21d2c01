from typing import Any, Dict, Optional
import logging

import numpy as np

from models.stimulus import Waveform
from utils.dsp import resample, resample_40k_to_16k
from utils.errors import AudioDeviceError

logger = logging.getLogger(__name__)


class LoopbackAudio:
    """Audio sink and source in one: the recorded response is the stimulus itself

    Used when the decoder listens to the stimulus directly (mock-tone or
    scripted sessions without a simulated participant).
    """

    def __init__(self, output_rate: int = 16000):
        self.output_rate = output_rate
        self._last: Optional[Waveform] = None

    def play(self, waveform: Waveform, context: Optional[Dict[str, Any]] = None):
        self._last = waveform

    def record(self, timeout: float) -> Waveform:
        if self._last is None:
            return Waveform.silence(timeout, self.output_rate)
        if self._last.sample_rate != self.output_rate:
            return resample(self._last, self.output_rate)
        return self._last


class SoundDeviceAudio:
    """Sound card playback and capture through the optional sounddevice package

    Recording starts after playback has finished and lasts ``timeout``
    seconds. Capture runs at ``record_rate`` and is down-sampled to
    ``output_rate`` for the decoder.
    """

    def __init__(self, record_rate: int = 40000, output_rate: int = 16000, device=None):
        self.record_rate = record_rate
        self.output_rate = output_rate
        self.device = device
        self._sd = None

    def _backend(self):
        if self._sd is None:
            try:
                import sounddevice
            except (ImportError, OSError) as e:
                raise AudioDeviceError(f"sounddevice is not available: {e}")
            self._sd = sounddevice
        return self._sd

    def play(self, waveform: Waveform, context: Optional[Dict[str, Any]] = None):
        sd = self._backend()
        try:
            # diotic presentation
            stereo = np.column_stack([waveform.samples, waveform.samples]).astype(np.float32)
            sd.play(stereo, samplerate=waveform.sample_rate, device=self.device)
            sd.wait()
        except Exception as e:
            logger.error(f"Playback failed: {e}")
            raise AudioDeviceError(f"Playback failed: {e}")

    def record(self, timeout: float) -> Waveform:
        sd = self._backend()
        n_frames = int(round(timeout * self.record_rate))
        try:
            captured = sd.rec(n_frames, samplerate=self.record_rate, channels=1, dtype='float64',
                              device=self.device)
            sd.wait()
        except Exception as e:
            logger.error(f"Recording failed: {e}")
            raise AudioDeviceError(f"Recording failed: {e}")

        recording = Waveform(samples=np.clip(captured[:, 0], -1.0, 1.0), sample_rate=self.record_rate)
        logger.debug(f"Recorded {recording.duration:.2f}s at {self.record_rate} Hz")
        if self.record_rate == 40000 and self.output_rate == 16000:
            return resample_40k_to_16k(recording)
        return resample(recording, self.output_rate)


def create_audio_service(kind: str = 'loopback', record_rate: int = 40000, output_rate: int = 16000,
                         device=None):
    """Create audio service instance"""
    if kind == 'device':
        return SoundDeviceAudio(record_rate=record_rate, output_rate=output_rate, device=device)
    return LoopbackAudio(output_rate=output_rate)
