from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from models.triplet import DigitTriplet
from utils.helpers import config_hash, parse_timestamp, read_json, write_json
from utils.validators import StaircaseValidator, ValidationError, raise_for

RESULT_SCHEMA = 'din-result/1'
SOFTWARE_VERSION = '1.0.0'


@dataclass(frozen=True)
class StaircaseConfig:
    start_snr: float = -5.0
    first_step_up: float = 4.0
    step: float = 2.0
    noise_level: float = 65.0
    speech_level_min: float = 42.0
    speech_level_max: float = 75.0
    n_trials: int = 24
    srt_window_start: int = 5
    max_first_trial_presentations: int = 10
    match_policy: str = 'contiguous'
    response_timeout: float = 5.0

    def __post_init__(self):
        raise_for(StaircaseValidator.validate_config(asdict(self)), 'staircase')

    @property
    def snr_min(self) -> float:
        return self.speech_level_min - self.noise_level

    @property
    def snr_max(self) -> float:
        return self.speech_level_max - self.noise_level

    @property
    def final_index(self) -> int:
        """Index of the last computed SNR (SNR_25 with defaults)"""
        return self.n_trials + 1

    @property
    def window_size(self) -> int:
        return self.final_index - self.srt_window_start + 1

    def clamp(self, snr: float) -> float:
        return float(min(max(snr, self.snr_min), self.snr_max))

    def speech_level(self, snr: float) -> float:
        return self.noise_level + snr

    def with_overrides(self, **overrides) -> 'StaircaseConfig':
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def hash(self) -> str:
        return config_hash(self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'StaircaseConfig':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def from_config(cls, config) -> 'StaircaseConfig':
        """Build from a Config class (see config.py)"""
        return cls(
            start_snr=config.DIN_START_SNR,
            first_step_up=config.DIN_FIRST_STEP_UP,
            step=config.DIN_STEP,
            noise_level=config.DIN_NOISE_LEVEL,
            speech_level_min=config.DIN_SPEECH_LEVEL_MIN,
            speech_level_max=config.DIN_SPEECH_LEVEL_MAX,
            n_trials=config.DIN_N_TRIALS,
            srt_window_start=config.DIN_SRT_WINDOW_START,
            max_first_trial_presentations=config.DIN_MAX_FIRST_PRESENTATIONS,
            match_policy=config.DIN_MATCH_POLICY,
            response_timeout=config.DIN_RESPONSE_TIMEOUT,
        )


@dataclass(frozen=True)
class StaircaseState:
    """Position of the staircase before a response is scored"""
    trial_index: int = 1
    snr: float = -5.0
    first_resolved: bool = False
    presentations: int = 1


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    presentation_count: int
    snr: float
    presented: DigitTriplet
    raw_transcript: Tuple[str, ...]
    digit_sequence: Tuple[int, ...]
    scored_correct: bool
    speech_level: float = 0.0
    noise_level: float = 0.0
    raw_output: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trial_index': self.trial_index,
            'presentation_count': self.presentation_count,
            'snr': self.snr,
            'speech_level': self.speech_level,
            'noise_level': self.noise_level,
            'presented': list(self.presented.digits),
            'raw_transcript': list(self.raw_transcript),
            'raw_output': self.raw_output,
            'digits': list(self.digit_sequence),
            'scored_correct': self.scored_correct,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrialRecord':
        return cls(
            trial_index=int(data['trial_index']),
            presentation_count=int(data.get('presentation_count', 1)),
            snr=float(data['snr']),
            presented=DigitTriplet.of(data['presented']),
            raw_transcript=tuple(data.get('raw_transcript', ())),
            digit_sequence=tuple(int(d) for d in data.get('digits', ())),
            scored_correct=bool(data['scored_correct']),
            speech_level=float(data.get('speech_level', 0.0)),
            noise_level=float(data.get('noise_level', 0.0)),
            raw_output=data.get('raw_output', ''),
        )


@dataclass(frozen=True)
class SessionResult:
    session_id: str
    list_id: str
    config: StaircaseConfig
    trials: Tuple[TrialRecord, ...]
    first_trial_repeats: Tuple[TrialRecord, ...]
    snr_history: Dict[int, float]
    final_snr: Optional[float]
    srt_mean: Optional[float]
    srt_sd: Optional[float]
    started_at: str
    finished_at: str
    seed: Optional[int] = None
    asr_backend: str = ''
    listener: Optional[str] = None
    status: str = 'complete'
    abort_reason: Optional[str] = None
    version: str = SOFTWARE_VERSION

    @property
    def is_complete(self) -> bool:
        return self.status == 'complete' and len(self.trials) == self.config.n_trials

    @property
    def total_presentations(self) -> int:
        return len(self.trials) + len(self.first_trial_repeats)

    @property
    def first_correct_snr(self) -> Optional[float]:
        for trial in self.trials:
            if trial.trial_index == 1 and trial.scored_correct:
                return trial.snr
        return None

    @property
    def duration_seconds(self) -> Optional[float]:
        if not self.started_at or not self.finished_at:
            return None
        return (parse_timestamp(self.finished_at) - parse_timestamp(self.started_at)).total_seconds()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': RESULT_SCHEMA,
            'version': self.version,
            'session_id': self.session_id,
            'list_id': self.list_id,
            'status': self.status,
            'abort_reason': self.abort_reason,
            'seed': self.seed,
            'asr_backend': self.asr_backend,
            'listener': self.listener,
            'config': self.config.to_dict(),
            'config_hash': self.config.hash(),
            'trials': [t.to_dict() for t in self.trials],
            'first_trial_repeats': [t.to_dict() for t in self.first_trial_repeats],
            'snr_history': {str(j): snr for j, snr in sorted(self.snr_history.items())},
            'total_presentations': self.total_presentations,
            'final_snr': self.final_snr,
            'srt_mean': self.srt_mean,
            'srt_sd': self.srt_sd,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SessionResult':
        if data.get('schema') != RESULT_SCHEMA:
            raise ValidationError(f"Unsupported result schema: {data.get('schema')!r}", 'schema')
        return cls(
            session_id=data['session_id'],
            list_id=str(data['list_id']),
            config=StaircaseConfig.from_dict(data['config']),
            trials=tuple(TrialRecord.from_dict(t) for t in data.get('trials', [])),
            first_trial_repeats=tuple(TrialRecord.from_dict(t) for t in data.get('first_trial_repeats', [])),
            snr_history={int(j): float(s) for j, s in data.get('snr_history', {}).items()},
            final_snr=data.get('final_snr'),
            srt_mean=data.get('srt_mean'),
            srt_sd=data.get('srt_sd'),
            started_at=data.get('started_at', ''),
            finished_at=data.get('finished_at', ''),
            seed=data.get('seed'),
            asr_backend=data.get('asr_backend', ''),
            listener=data.get('listener'),
            status=data.get('status', 'complete'),
            abort_reason=data.get('abort_reason'),
            version=data.get('version', SOFTWARE_VERSION),
        )

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> 'SessionResult':
        path = Path(path)
        if not path.exists():
            raise ValidationError(f'Result file not found: {path}', 'result')
        return cls.from_dict(read_json(path))
