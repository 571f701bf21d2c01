import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.evaluation import ErrorEffectModel
from utils.helpers import read_json, write_json
from utils.validators import ValidationError

FRAME_SCHEMA = 'din-frame/1'
BOOTSTRAP_SCHEMA = 'din-bootstrap/1'
RNG_ALGORITHM = 'numpy.PCG64/SeedSequence'
HISTOGRAM_BIN_DB = 0.5
# Within-subject SRT variability for young normal-hearing adults
DEFAULT_ACCEPTABLE_DEVIATION_DB = 0.70


@dataclass(frozen=True)
class FrameEntry:
    snr: float
    n_presented: int
    n_correct: int

    def __post_init__(self):
        if not 0 <= self.n_correct <= self.n_presented or self.n_presented < 1:
            raise ValidationError(
                f'Invalid tally at {self.snr} dB: {self.n_correct}/{self.n_presented}', 'entries'
            )

    @property
    def p_correct(self) -> float:
        return self.n_correct / float(self.n_presented)


@dataclass(frozen=True)
class SamplingFrame:
    """Per-SNR empirical probability of a correct spoken response"""
    entries: Tuple[FrameEntry, ...]
    first_correct_snr: float
    source_session: str = ''

    def __post_init__(self):
        if not self.entries:
            raise ValidationError('Sampling frame needs at least one entry', 'entries')
        snrs = [entry.snr for entry in self.entries]
        if len(set(snrs)) != len(snrs):
            raise ValidationError('Sampling frame has duplicate SNR entries', 'entries')
        object.__setattr__(self, 'entries', tuple(sorted(self.entries, key=lambda e: e.snr)))

    @property
    def snrs(self) -> np.ndarray:
        return np.array([entry.snr for entry in self.entries], dtype=np.float64)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([entry.p_correct for entry in self.entries], dtype=np.float64)

    def as_mapping(self) -> Dict[float, float]:
        return {entry.snr: entry.p_correct for entry in self.entries}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema': FRAME_SCHEMA,
            'source_session': self.source_session,
            'first_correct_snr': self.first_correct_snr,
            'entries': [
                {'snr': e.snr, 'n_presented': e.n_presented, 'n_correct': e.n_correct, 'p_correct': e.p_correct}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SamplingFrame':
        if data.get('schema') != FRAME_SCHEMA:
            raise ValidationError(f"Unsupported frame schema: {data.get('schema')!r}", 'schema')
        try:
            entries = tuple(
                FrameEntry(snr=float(e['snr']), n_presented=int(e['n_presented']), n_correct=int(e['n_correct']))
                for e in data['entries']
            )
            first_correct = float(data['first_correct_snr'])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f'Malformed sampling frame: {e}', 'frame')
        return cls(entries=entries, first_correct_snr=first_correct,
                   source_session=data.get('source_session', ''))

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> 'SamplingFrame':
        path = Path(path)
        if not path.exists():
            raise ValidationError(f'Frame file not found: {path}', 'frame')
        return cls.from_dict(read_json(path))


@dataclass
class LogisticListener:
    """Synthetic participant with a logistic psychometric function

    ``slope`` is the probability gain per dB at the midpoint.
    """
    midpoint: float
    slope: float
    lapse: float = 0.0
    seed: Optional[int] = None
    rng: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.slope <= 0:
            raise ValidationError('Listener slope must be positive', 'slope')
        if not 0.0 <= self.lapse <= 0.1:
            raise ValidationError('Listener lapse rate must lie in [0, 0.1]', 'lapse')
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    def probability(self, snr: float) -> float:
        return (1.0 - self.lapse) / (1.0 + np.exp(-4.0 * self.slope * (snr - self.midpoint)))

    def describe(self) -> str:
        return f'logistic:{self.midpoint:g},{self.slope:g},{self.lapse:g}'

    @classmethod
    def parse(cls, text: str, seed: Optional[int] = None) -> 'LogisticListener':
        """Parse 'logistic:<midpoint>,<slope>[,<lapse>]'"""
        match = re.fullmatch(r'\s*logistic:\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*(?:,\s*([-+0-9.eE]+))?\s*', text or '')
        if not match:
            raise ValidationError(f'Listener must look like logistic:<midpoint>,<slope>[,<lapse>], got {text!r}',
                                  'listener')
        return cls(
            midpoint=float(match.group(1)),
            slope=float(match.group(2)),
            lapse=float(match.group(3) or 0.0),
            seed=seed,
        )


@dataclass(frozen=True, eq=False)
class ErrorCountSummary:
    errors: int
    mu: float
    sigma: float
    deviation: float
    samples: np.ndarray = field(repr=False)
    deviation_from_session: Optional[float] = None

    def histogram(self, bin_width: float = HISTOGRAM_BIN_DB) -> Tuple[np.ndarray, np.ndarray]:
        low = np.floor(self.samples.min() / bin_width) * bin_width
        high = np.ceil(self.samples.max() / bin_width) * bin_width
        if high <= low:
            high = low + bin_width
        edges = np.arange(low, high + bin_width / 2.0, bin_width)
        counts, edges = np.histogram(self.samples, bins=edges)
        return edges, counts

    def to_dict(self) -> Dict[str, Any]:
        edges, counts = self.histogram()
        return {
            'errors': self.errors,
            'mu': self.mu,
            'sigma': self.sigma,
            'deviation': self.deviation,
            'deviation_from_session': self.deviation_from_session,
            'histogram': {'edges': [float(e) for e in edges], 'counts': [int(c) for c in counts]},
        }


@dataclass(frozen=True, eq=False)
class BootstrapReport:
    n_runs: int
    seed: int
    effect: ErrorEffectModel
    effect_form: str
    baseline_mu: float
    baseline_sigma: float
    summaries: Tuple[ErrorCountSummary, ...]
    config_hash: str = ''
    source_session: str = ''
    session_srt_mean: Optional[float] = None
    acceptable_deviation: float = DEFAULT_ACCEPTABLE_DEVIATION_DB

    def summary(self, errors: int) -> ErrorCountSummary:
        for item in self.summaries:
            if item.errors == errors:
                return item
        raise KeyError(errors)

    @property
    def error_counts(self) -> List[int]:
        return [item.errors for item in self.summaries]

    @property
    def max_acceptable_errors(self) -> Optional[int]:
        """Largest e whose mean stays within the acceptable deviation for every e up to it"""
        best = None
        for item in sorted(self.summaries, key=lambda s: s.errors):
            if item.deviation > self.acceptable_deviation:
                break
            best = item.errors
        return best

    def to_dict(self) -> Dict[str, Any]:
        baseline_deviation = None
        if self.session_srt_mean is not None:
            baseline_deviation = abs(self.session_srt_mean - self.baseline_mu)
        return {
            'schema': BOOTSTRAP_SCHEMA,
            'rng': RNG_ALGORITHM,
            'seed': self.seed,
            'n_runs': self.n_runs,
            'config_hash': self.config_hash,
            'source_session': self.source_session,
            'effect_form': self.effect_form,
            'effect': self.effect.to_dict(),
            'baseline': {
                'mu': self.baseline_mu,
                'sigma': self.baseline_sigma,
                'session_srt_mean': self.session_srt_mean,
                'deviation_from_session': baseline_deviation,
            },
            'acceptable_deviation': self.acceptable_deviation,
            'max_acceptable_errors': self.max_acceptable_errors,
            'errors': [
                dict(item.to_dict(), acceptable=item.deviation <= self.acceptable_deviation)
                for item in self.summaries
            ],
        }

    def save(self, path) -> Path:
        return write_json(path, self.to_dict())

    def summary_rows(self) -> List[Tuple[int, float, float, float]]:
        return [(item.errors, item.mu, item.sigma, item.deviation) for item in self.summaries]

    def histogram_rows(self) -> List[Tuple[int, float, float, int]]:
        rows = []
        for item in self.summaries:
            edges, counts = item.histogram()
            for low, high, count in zip(edges[:-1], edges[1:], counts):
                rows.append((item.errors, float(low), float(high), int(count)))
        return rows
