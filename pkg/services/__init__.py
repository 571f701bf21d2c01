# Services package
from .stimulus_service import StimulusService, StimulusMix, create_stimulus_service
from .asr_service import (
    ExternalAsrService, MockToneAsr, ScriptedAsr, create_asr_service,
    decode_external, extract_digits, mock_tone_decode
)
from .audio_service import LoopbackAudio, SoundDeviceAudio, create_audio_service
from .listener_service import SimulatedParticipant, create_listener_service, logistic_listener_respond

__all__ = [
    'StimulusService', 'StimulusMix', 'create_stimulus_service',
    'ExternalAsrService', 'MockToneAsr', 'ScriptedAsr', 'create_asr_service',
    'decode_external', 'extract_digits', 'mock_tone_decode',
    'LoopbackAudio', 'SoundDeviceAudio', 'create_audio_service',
    'SimulatedParticipant', 'create_listener_service', 'logistic_listener_respond'
]
