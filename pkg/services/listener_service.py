from typing import Any, Dict, Optional, Tuple
import logging

import numpy as np

from models.simulation import LogisticListener
from models.stimulus import Waveform
from models.triplet import DigitTriplet
from services.stimulus_service import StimulusService

logger = logging.getLogger(__name__)


def logistic_listener_respond(listener: LogisticListener, snr: float) -> bool:
    """Draw whether the listener repeats a triplet correctly at this SNR"""
    return bool(listener.rng.random() < listener.probability(snr))


def mistaken_response(presented: DigitTriplet, rng: np.random.Generator) -> Tuple[int, ...]:
    """A plausible wrong answer: one digit substituted or one digit left out"""
    digits = list(presented.digits)
    position = int(rng.integers(3))
    if rng.random() < 0.5:
        choices = [d for d in range(10) if d != digits[position]]
        digits[position] = int(choices[int(rng.integers(len(choices)))])
    else:
        del digits[position]
    return tuple(digits)


class SimulatedParticipant:
    """Simulated listener acting as the audio sink and source of a session

    ``play`` tells the participant which triplet was presented at which SNR;
    ``record`` returns the spoken reply as tone-signature digits for the
    mock decoder.
    """

    def __init__(self, listener: LogisticListener, stimulus_service: Optional[StimulusService] = None,
                 burst_rate: float = 0.0):
        self.listener = listener
        self.stimulus_service = stimulus_service or StimulusService()
        self.burst_rate = burst_rate
        self._context: Dict[str, Any] = {}
        self.spoken_log = []

    def play(self, waveform: Waveform, context: Optional[Dict[str, Any]] = None):
        self._context = dict(context or {})

    def record(self, timeout: float) -> Waveform:
        presented = self._context.get('presented')
        rng = self.listener.rng
        if presented is None:
            return Waveform.silence(timeout, self.stimulus_service.sample_rate)

        if logistic_listener_respond(self.listener, self._context['snr']):
            spoken = presented.digits
        else:
            spoken = mistaken_response(presented, rng)
        burst = self.burst_rate > 0 and rng.random() < self.burst_rate

        self.spoken_log.append(spoken)
        logger.debug(f"Participant heard {presented} at {self._context['snr']:+.1f} dB, says {spoken}")
        return self.stimulus_service.synth_response(spoken, rng, leading_burst=burst)


def create_listener_service(listener: LogisticListener, stimulus_service: Optional[StimulusService] = None,
                            burst_rate: float = 0.0) -> SimulatedParticipant:
    """Create simulated participant instance"""
    return SimulatedParticipant(listener, stimulus_service=stimulus_service, burst_rate=burst_rate)
