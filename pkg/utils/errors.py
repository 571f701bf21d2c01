"""Exception hierarchy for the DIN toolkit.

Every error carries a ``code`` that the command line maps to its exit status.
"""
from typing import Optional


class DinError(Exception):
    """Base class for all domain errors"""
    code = 1

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details or {}
        super().__init__(message)


# Staircase engine

class SessionError(DinError):
    code = 3

    def __init__(self, message: str, details: Optional[dict] = None, partial_log: Optional[str] = None):
        super().__init__(message, details)
        self.partial_log = partial_log


class FirstTripletFailure(SessionError):
    """First triplet never scored correct within the presentation budget"""


class IncompleteSession(SessionError):
    """SNR history does not cover the SRT window"""


# ASR bridge

class AsrError(SessionError):
    pass


class AsrUnavailable(AsrError):
    """Decoder could not be started or exited with an error"""


class AsrTimeout(AsrError):
    pass


class AsrOutputUnparseable(AsrError):
    pass


class AudioDeviceError(SessionError):
    """Playback or recording failed"""


# Evaluation

class EvaluationError(DinError):
    code = 2


class EmptyReference(EvaluationError):
    pass


class EmptyModel(EvaluationError):
    pass


class DegenerateGroup(EvaluationError):
    pass


# Simulation

class EmptySamples(DinError):
    code = 2


# Stimuli and audio

class StimulusError(DinError):
    code = 2


class MissingAsset(StimulusError):
    pass


class ClippingAfterGain(StimulusError):
    pass


class WrongSampleRate(StimulusError):
    pass


class TooShort(StimulusError):
    pass


class WavError(StimulusError):
    pass


class MalformedWav(WavError):
    pass


class UnsupportedFormat(WavError):
    pass
