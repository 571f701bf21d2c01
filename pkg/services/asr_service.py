import itertools
import logging
import os
import shlex
import subprocess
import tempfile
from typing import Any, Callable, Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from models.stimulus import Waveform
from models.transcript import DIGIT_WORDS, AsrBackendSpec, DigitLexicon, Transcript
from services.stimulus_service import HIGH_TONES_HZ, LOW_TONES_HZ
from utils.dsp import wav_write
from utils.errors import AsrOutputUnparseable, AsrTimeout, AsrUnavailable, WrongSampleRate

logger = logging.getLogger(__name__)

# Tone detector settings
FRAME_SECONDS = 0.06
HOP_SECONDS = 0.02
BAND_HALF_WIDTH_HZ = 30.0
FLOOR_BAND_HZ = (300.0, 6000.0)
DETECTION_RATIO = 10.0
ABSOLUTE_FLOOR = 1e-9
MIN_RUN_FRAMES = 5

ScriptEntry = Union[str, Sequence[str]]


def extract_digits(transcript: Transcript, lexicon: Optional[DigitLexicon] = None) -> Tuple[int, ...]:
    """Keep the digit words of a transcript, in order, without deduplication"""
    lexicon = lexicon or DigitLexicon()
    digits = []
    for token in transcript.tokens:
        digits.extend(lexicon.lookup(token))
    return tuple(digits)


def _band_power(spectrum: np.ndarray, freqs: np.ndarray, centre: float) -> Tuple[np.ndarray, int]:
    band = np.abs(freqs - centre) <= BAND_HALF_WIDTH_HZ
    return spectrum[:, band].sum(axis=1), int(band.sum())


def detect_tone_frames(waveform: Waveform) -> np.ndarray:
    """Digit label per analysis frame; -1 where no signature is present"""
    rate = waveform.sample_rate
    frame = int(round(FRAME_SECONDS * rate))
    hop = int(round(HOP_SECONDS * rate))
    if len(waveform.samples) < frame:
        return np.empty(0, dtype=int)

    frames = np.lib.stride_tricks.sliding_window_view(waveform.samples, frame)[::hop]
    spectrum = np.abs(np.fft.rfft(frames * np.hanning(frame), axis=1)) ** 2
    freqs = np.fft.rfftfreq(frame, d=1.0 / rate)

    floor_bins = (freqs >= FLOOR_BAND_HZ[0]) & (freqs <= FLOOR_BAND_HZ[1])
    # median of exponential bin powers is mean * ln 2
    floor_per_bin = np.median(spectrum[:, floor_bins], axis=1) / np.log(2.0)

    def scores(centres):
        powers = []
        for centre in centres:
            power, n_bins = _band_power(spectrum, freqs, centre)
            floor = np.maximum(floor_per_bin * n_bins, ABSOLUTE_FLOOR)
            powers.append(power / floor)
        return np.stack(powers, axis=1)

    low = scores(LOW_TONES_HZ)
    high = scores(HIGH_TONES_HZ)

    labels = np.argmax(low, axis=1) + 5 * np.argmax(high, axis=1)
    present = (low.max(axis=1) > DETECTION_RATIO) & (high.max(axis=1) > DETECTION_RATIO)
    return np.where(present, labels, -1)


def mock_tone_decode(waveform: Waveform) -> Transcript:
    """Decode two-tone digit signatures into Dutch digit words"""
    words = []
    for label, run in itertools.groupby(detect_tone_frames(waveform).tolist()):
        if label >= 0 and len(list(run)) >= MIN_RUN_FRAMES:
            words.append(DIGIT_WORDS[label])
    return Transcript(tokens=tuple(words), source='mock', raw_output=' '.join(words))


class ExternalAsrService:
    """Run an external decoder once per response

    The command template receives the path of a 16-bit PCM mono WAV through
    the ``{wav}`` placeholder and must print the transcript on stdout.
    """

    def __init__(self, spec: AsrBackendSpec):
        self.spec = spec

    def _command(self, wav_path: str) -> list:
        return [arg.replace('{wav}', wav_path) for arg in shlex.split(self.spec.command)]

    def decode(self, waveform: Waveform, context: Optional[Dict[str, Any]] = None) -> Transcript:
        if waveform.sample_rate != self.spec.sample_rate:
            raise WrongSampleRate(
                f"Decoder expects {self.spec.sample_rate} Hz audio, got {waveform.sample_rate} Hz"
            )

        with tempfile.TemporaryDirectory(prefix='din-asr-') as workdir:
            wav_path = os.path.join(workdir, 'response.wav')
            wav_write(wav_path, waveform)
            command = self._command(wav_path)
            logger.debug(f"Running decoder: {' '.join(command)}")

            try:
                completed = subprocess.run(
                    command,
                    capture_output=True,
                    timeout=self.spec.timeout,
                    cwd=self.spec.working_dir,
                )
            except subprocess.TimeoutExpired:
                logger.error(f"Decoder timed out after {self.spec.timeout}s")
                raise AsrTimeout(f"Decoder did not finish within {self.spec.timeout}s",
                                 {'command': self.spec.command})
            except OSError as e:
                logger.error(f"Decoder could not be started: {e}")
                raise AsrUnavailable(f"Decoder could not be started: {e}", {'command': self.spec.command})

        if completed.returncode != 0:
            stderr = completed.stderr.decode('utf-8', errors='replace').strip()
            logger.error(f"Decoder exited with status {completed.returncode}: {stderr[-200:]}")
            raise AsrUnavailable(
                f"Decoder exited with status {completed.returncode}",
                {'command': self.spec.command, 'stderr': stderr},
            )

        try:
            text = completed.stdout.decode('utf-8')
        except UnicodeDecodeError as e:
            raise AsrOutputUnparseable(f"Decoder output is not UTF-8: {e}")
        if '\x00' in text:
            raise AsrOutputUnparseable("Decoder output contains NUL bytes")

        transcript = Transcript.from_text(text, source='external-asr')
        logger.debug(f"Decoder output: {text.strip()!r}")
        return transcript


def decode_external(waveform: Waveform, spec: AsrBackendSpec) -> Transcript:
    return ExternalAsrService(spec).decode(waveform)


class MockToneAsr:
    """Hermetic decoder for the synthetic tone-signature digits"""

    def decode(self, waveform: Waveform, context: Optional[Dict[str, Any]] = None) -> Transcript:
        return mock_tone_decode(waveform)


class ScriptedAsr:
    """Decoder returning predetermined transcripts

    ``script`` is either a sequence of responses (consumed in order) or a
    callable receiving the trial context (presented triplet, snr, trial
    index, presentation number).
    """

    def __init__(self, script: Union[Callable[[Dict[str, Any]], ScriptEntry], Iterable[ScriptEntry]]):
        if callable(script):
            self._callable = script
            self._queue = None
        else:
            self._callable = None
            self._queue = iter(list(script))

    def decode(self, waveform: Optional[Waveform] = None, context: Optional[Dict[str, Any]] = None) -> Transcript:
        if self._callable is not None:
            entry = self._callable(context or {})
        else:
            try:
                entry = next(self._queue)
            except StopIteration:
                raise AsrUnavailable("Scripted decoder has no responses left")

        if entry is None:
            entry = ''
        text = entry if isinstance(entry, str) else ' '.join(str(token) for token in entry)
        return Transcript.from_text(text, source='mock')


def create_asr_service(spec: Optional[AsrBackendSpec] = None, script=None):
    """Create ASR service instance for a backend spec"""
    spec = spec or AsrBackendSpec()
    if spec.kind == 'external-process':
        return ExternalAsrService(spec)
    if spec.kind == 'scripted':
        if script is None:
            raise AsrUnavailable("Scripted decoder needs a script")
        return ScriptedAsr(script)
    return MockToneAsr()
