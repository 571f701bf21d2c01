# Models package
from .triplet import DigitTriplet, TripletList, builtin_lists, get_builtin_list
from .session import StaircaseConfig, StaircaseState, TrialRecord, SessionResult
from .transcript import Transcript, DigitLexicon, AsrBackendSpec
from .evaluation import AnnotatedResponse, AlignmentOp, AlignmentResult, ErrorEffectModel
from .simulation import SamplingFrame, FrameEntry, LogisticListener, ErrorCountSummary, BootstrapReport
from .stimulus import Waveform, StimulusTiming, StimulusManifest

__all__ = [
    'DigitTriplet', 'TripletList', 'builtin_lists', 'get_builtin_list',
    'StaircaseConfig', 'StaircaseState', 'TrialRecord', 'SessionResult',
    'Transcript', 'DigitLexicon', 'AsrBackendSpec',
    'AnnotatedResponse', 'AlignmentOp', 'AlignmentResult', 'ErrorEffectModel',
    'SamplingFrame', 'FrameEntry', 'LogisticListener', 'ErrorCountSummary', 'BootstrapReport',
    'Waveform', 'StimulusTiming', 'StimulusManifest'
]
