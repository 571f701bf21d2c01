from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from utils.validators import AudioValidator, ValidationError, raise_for


@dataclass(frozen=True, eq=False)
class Waveform:
    """Mono audio with amplitudes in [-1, 1]"""
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError('Waveform must be mono (1-D samples)', 'samples')
        if not np.all(np.isfinite(samples)):
            raise ValidationError('Waveform samples must be finite', 'samples')
        if len(samples) and np.max(np.abs(samples)) > 1.0:
            raise ValidationError(f'Waveform exceeds full scale (peak {np.max(np.abs(samples)):.3f})', 'samples')
        object.__setattr__(self, 'samples', samples)
        raise_for(AudioValidator.validate_sample_rate(self.sample_rate), 'sample_rate')

    @property
    def duration(self) -> float:
        return len(self.samples) / float(self.sample_rate)

    @property
    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples ** 2)))

    @property
    def peak(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        return float(np.max(np.abs(self.samples)))

    @classmethod
    def silence(cls, seconds: float, sample_rate: int = 16000) -> 'Waveform':
        return cls(samples=np.zeros(int(round(seconds * sample_rate))), sample_rate=sample_rate)


@dataclass(frozen=True)
class StimulusTiming:
    """Triplet assembly timing in seconds"""
    leading_gap: float = 0.5
    inter_digit_gap: float = 0.15
    trailing_gap: float = 0.5
    jitter: float = 0.05
    noise_min: float = 2.8
    noise_max: float = 3.1

    def to_dict(self) -> Dict[str, float]:
        return {
            'leading_gap': self.leading_gap,
            'inter_digit_gap': self.inter_digit_gap,
            'trailing_gap': self.trailing_gap,
            'jitter': self.jitter,
            'noise_min': self.noise_min,
            'noise_max': self.noise_max,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'StimulusTiming':
        data = data or {}
        return cls(**{key: float(value) for key, value in data.items() if key in cls.__dataclass_fields__})


@dataclass(frozen=True)
class StimulusManifest:
    """Recorded speech material: digit assets, level corrections, noise tokens"""
    digits: Dict[int, str]
    corrections_db: Dict[int, float]
    noise_tokens: Tuple[str, ...]
    sample_rate: int = 16000
    timing: StimulusTiming = field(default_factory=StimulusTiming)
    base_dir: Optional[str] = None

    def __post_init__(self):
        raise_for(AudioValidator.validate_manifest(self.to_dict()), 'manifest')

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        if not path.is_absolute() and self.base_dir:
            path = Path(self.base_dir) / path
        return path

    def correction(self, digit: int) -> float:
        return float(self.corrections_db.get(digit, 0.0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': 'din-manifest/1',
            'sample_rate': self.sample_rate,
            'digits': {str(d): p for d, p in sorted(self.digits.items())},
            'corrections_db': {str(d): c for d, c in sorted(self.corrections_db.items())},
            'noise_tokens': list(self.noise_tokens),
            'timing': self.timing.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Optional[str] = None) -> 'StimulusManifest':
        raise_for(AudioValidator.validate_manifest(data), 'manifest')
        return cls(
            digits={int(d): str(p) for d, p in data['digits'].items()},
            corrections_db={int(d): float(c) for d, c in (data.get('corrections_db') or {}).items()},
            noise_tokens=tuple(str(p) for p in data['noise_tokens']),
            sample_rate=int(data['sample_rate']),
            timing=StimulusTiming.from_dict(data.get('timing')),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path) -> 'StimulusManifest':
        from utils.helpers import read_json

        path = Path(path)
        if not path.exists():
            raise ValidationError(f'Manifest not found: {path}', 'manifest')
        return cls.from_dict(read_json(path), base_dir=str(path.parent))
