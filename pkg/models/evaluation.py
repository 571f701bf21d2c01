from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from models.triplet import DigitTriplet
from utils.errors import EmptyModel
from utils.validators import TripletValidator, ValidationError, raise_for

EFFECT_FORMS = ('conditional', 'joint')
# Published confusion matrix of triplets with decoding errors:
# rows scored correct / scored incorrect, columns spoken correct / spoken incorrect
PUBLISHED_EFFECT_COUNTS = ((10, 1), (50, 19))


@dataclass(frozen=True)
class AnnotatedResponse:
    presented: DigitTriplet
    spoken: Tuple[int, ...]
    decoded: Tuple[int, ...]
    session_id: str = ''
    trial_index: int = 0
    group: Optional[str] = None

    def __post_init__(self):
        raise_for(TripletValidator.validate_sequence(self.spoken), 'spoken')
        raise_for(TripletValidator.validate_sequence(self.decoded), 'decoded')

    @property
    def has_decoding_error(self) -> bool:
        return tuple(self.decoded) != tuple(self.spoken)


@dataclass(frozen=True)
class AlignmentOp:
    """One alignment step: kind is match, sub, del or ins

    ``ref_pos`` is the 0-based reference position for match/sub/del and the
    insertion slot (number of reference digits already consumed) for ins.
    """
    kind: str
    ref: Optional[int]
    hyp: Optional[int]
    ref_pos: int

    def to_dict(self) -> Dict[str, Any]:
        return {'op': self.kind, 'ref': self.ref, 'hyp': self.hyp, 'ref_pos': self.ref_pos}


@dataclass(frozen=True)
class AlignmentResult:
    insertions: int
    deletions: int
    substitutions: int
    ops: Tuple[AlignmentOp, ...]
    reference_length: int

    @property
    def errors(self) -> int:
        return self.insertions + self.deletions + self.substitutions

    def tally(self, kind: str) -> Dict[int, int]:
        """Count of ops of one kind per reference position (slot for insertions)"""
        counts: Dict[int, int] = {}
        for op in self.ops:
            if op.kind == kind:
                counts[op.ref_pos] = counts.get(op.ref_pos, 0) + 1
        return counts

    @property
    def deletions_by_position(self) -> Dict[int, int]:
        return self.tally('del')

    @property
    def substitutions_by_position(self) -> Dict[int, int]:
        return self.tally('sub')

    @property
    def insertions_by_slot(self) -> Dict[int, int]:
        return self.tally('ins')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'insertions': self.insertions,
            'deletions': self.deletions,
            'substitutions': self.substitutions,
            'ops': [op.to_dict() for op in self.ops],
        }


@dataclass(frozen=True)
class ErrorEffectModel:
    """2x2 counts of triplets with decoding errors

    counts[0] = scored correct, counts[1] = scored incorrect;
    column 0 = spoken correct, column 1 = spoken incorrect.
    """
    counts: Tuple[Tuple[int, int], Tuple[int, int]]

    def __post_init__(self):
        if len(self.counts) != 2 or any(len(row) != 2 for row in self.counts):
            raise ValidationError('Effect model needs a 2x2 count matrix', 'counts')
        for row in self.counts:
            for value in row:
                if not isinstance(value, int) or value < 0:
                    raise ValidationError(f'Counts must be non-negative integers, got {value!r}', 'counts')

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def joint(self) -> Tuple[float, float, float, float]:
        """(affecting|correct, affecting|incorrect, not affecting|correct, not affecting|incorrect)
        as proportions of all triplets with decoding errors"""
        if self.total == 0:
            raise EmptyModel("Effect model has no counts")
        total = float(self.total)
        (sc_c, sc_i), (si_c, si_i) = self.counts
        return (si_c / total, sc_i / total, sc_c / total, si_i / total)

    @property
    def flip_given_correct(self) -> float:
        (sc_c, _), (si_c, _) = self.counts
        column = sc_c + si_c
        return si_c / column if column else 0.0

    @property
    def flip_given_incorrect(self) -> float:
        (_, sc_i), (_, si_i) = self.counts
        column = sc_i + si_i
        return sc_i / column if column else 0.0

    def flip_probabilities(self, form: str = 'conditional') -> Tuple[float, float]:
        """(flip | spoken correct, flip | spoken incorrect) for error injection"""
        if form == 'conditional':
            return (self.flip_given_correct, self.flip_given_incorrect)
        if form == 'joint':
            joint = self.joint
            return (joint[0], joint[1])
        raise ValidationError(f"Effect form must be one of {', '.join(EFFECT_FORMS)}", 'form')

    def to_dict(self) -> Dict[str, Any]:
        joint = self.joint
        return {
            'counts': {
                'scored_correct': {'spoken_correct': self.counts[0][0], 'spoken_incorrect': self.counts[0][1]},
                'scored_incorrect': {'spoken_correct': self.counts[1][0], 'spoken_incorrect': self.counts[1][1]},
            },
            'total': self.total,
            'joint': {
                'affecting_given_correct': joint[0],
                'affecting_given_incorrect': joint[1],
                'not_affecting_given_correct': joint[2],
                'not_affecting_given_incorrect': joint[3],
            },
            'conditional': {
                'flip_given_correct': self.flip_given_correct,
                'flip_given_incorrect': self.flip_given_incorrect,
            },
        }

    @classmethod
    def from_flat(cls, values) -> 'ErrorEffectModel':
        """From 'scored-correct row then scored-incorrect row', e.g. (10, 1, 50, 19)"""
        values = [int(v) for v in values]
        if len(values) != 4:
            raise ValidationError('Effect counts need four values', 'counts')
        return cls(counts=((values[0], values[1]), (values[2], values[3])))

    @classmethod
    def published(cls) -> 'ErrorEffectModel':
        return cls(counts=PUBLISHED_EFFECT_COUNTS)
