"""Offline evaluation of decoded responses against manual annotations.

Alignment and WER, the decoding-error case taxonomy, the effect-of-error
model and the Welch comparison of participant groups.
"""
from collections import OrderedDict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy import stats

from handlers.session import score_response
from models.evaluation import AlignmentOp, AlignmentResult, AnnotatedResponse, ErrorEffectModel
from models.session import SessionResult
from models.triplet import DigitTriplet
from utils.errors import DegenerateGroup, EmptyModel, EmptyReference
from utils.helpers import config_hash, read_csv, read_json
from utils.validators import AnnotationValidator, ValidationError

logger = logging.getLogger(__name__)

EVALUATION_SCHEMA = 'din-evaluation/1'
NO_ERROR = 'no-error'
CASES = (1, 2, 3, 4, NO_ERROR)
# (row, column) of each case in the effect-model counts
_CASE_CELLS = {3: (0, 0), 2: (0, 1), 1: (1, 0), 4: (1, 1)}


def align_digits(ref: Sequence[int], hyp: Sequence[int]) -> AlignmentResult:
    """Levenshtein alignment with unit costs

    Among optimal alignments the backtrace prefers match/substitution, then
    deletion, then insertion.
    """
    ref, hyp = tuple(ref), tuple(hyp)
    n, m = len(ref), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=int)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dist[i, j] = min(
                dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]),
                dist[i - 1, j] + 1,
                dist[i, j - 1] + 1,
            )

    ops: List[AlignmentOp] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            kind = 'match' if ref[i - 1] == hyp[j - 1] else 'sub'
            ops.append(AlignmentOp(kind, ref[i - 1], hyp[j - 1], i - 1))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            ops.append(AlignmentOp('del', ref[i - 1], None, i - 1))
            i -= 1
        else:
            ops.append(AlignmentOp('ins', None, hyp[j - 1], i))
            j -= 1
    ops.reverse()

    return AlignmentResult(
        insertions=sum(op.kind == 'ins' for op in ops),
        deletions=sum(op.kind == 'del' for op in ops),
        substitutions=sum(op.kind == 'sub' for op in ops),
        ops=tuple(ops),
        reference_length=n,
    )


def compute_wer(responses: Iterable[AnnotatedResponse]) -> float:
    """Pooled WER in percent: all edits over all annotated (spoken) digits"""
    errors = 0
    reference = 0
    for response in responses:
        errors += align_digits(response.spoken, response.decoded).errors
        reference += len(response.spoken)
    if reference == 0:
        raise EmptyReference("No annotated digits to compute a WER against")
    return 100.0 * errors / reference


def classify_case(response: AnnotatedResponse, policy: str = 'contiguous') -> Union[int, str]:
    """Decoding-error case 1-4, or 'no-error' when the decoder got the spoken digits

    1: spoken correct, decoded incorrect. 2: spoken incorrect, decoded correct.
    3: both correct. 4: both incorrect. Case 3 covers every decoding error that
    leaves a correct response scored correct, so the differences lie outside the
    presented triplet: inserted digits (the usual case) but also dropped or
    substituted extra digits the participant spoke.
    """
    if not response.has_decoding_error:
        return NO_ERROR
    spoken_correct = score_response(response.presented, response.spoken, policy)
    scored_correct = score_response(response.presented, response.decoded, policy)
    if spoken_correct:
        return 3 if scored_correct else 1
    return 2 if scored_correct else 4


def effect_model(counts) -> ErrorEffectModel:
    """Effect model from 2x2 counts (rows scored correct/incorrect, columns spoken correct/incorrect)"""
    model = ErrorEffectModel(counts=tuple(tuple(int(v) for v in row) for row in counts))
    if model.total == 0:
        raise EmptyModel("Effect model needs at least one triplet with a decoding error")
    return model


def effect_counts(responses: Iterable[AnnotatedResponse], policy: str = 'contiguous') -> Tuple[Tuple[int, int], Tuple[int, int]]:
    cells = [[0, 0], [0, 0]]
    for response in responses:
        case = classify_case(response, policy)
        if case != NO_ERROR:
            row, column = _CASE_CELLS[case]
            cells[row][column] += 1
    return (tuple(cells[0]), tuple(cells[1]))


def welch_t(group_a: Sequence[float], group_b: Sequence[float]) -> Tuple[float, float, float]:
    """Welch's unequal-variance t-test: (t, Welch-Satterthwaite df, two-sided p)"""
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    for name, values in (('A', a), ('B', b)):
        if len(values) < 2:
            raise DegenerateGroup(f"Group {name} needs at least two values")
        if np.var(values) == 0:
            raise DegenerateGroup(f"Group {name} has zero variance")

    result = stats.ttest_ind(a, b, equal_var=False)
    return float(result.statistic), float(result.df), float(result.pvalue)


def _slot_name(slot: int, reference_length: int) -> str:
    if slot == 0:
        return 'beginning'
    if slot >= reference_length:
        return 'end'
    return 'middle'


def load_annotations(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Validated annotation rows from CSV or JSON"""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"Annotation file not found: {path}", 'annotations')

    if path.suffix.lower() == '.json':
        data = read_json(path)
        rows = data.get('annotations', []) if isinstance(data, dict) else data
    else:
        rows = read_csv(path)

    if not rows:
        raise ValidationError(f"Annotation file {path} has no rows", 'annotations')

    validated = []
    for number, row in enumerate(rows, start=1):
        validation = AnnotationValidator.validate_row(row)
        if not validation['valid']:
            raise ValidationError(f"Annotation row {number}: {'; '.join(validation['errors'])}", 'annotations')
        validated.append(validation['data'])
    return validated


def build_responses(rows: Iterable[Dict[str, Any]],
                    results: Optional[Mapping[str, SessionResult]] = None) -> List[AnnotatedResponse]:
    """Annotated responses, filling presented/decoded digits from session results when a row omits them"""
    results = results or {}
    responses = []
    for row in rows:
        presented = row.get('presented')
        decoded = row.get('decoded')

        if presented is None or decoded is None:
            result = results.get(row['session_id'])
            trial = None
            if result is not None:
                trial = next((t for t in result.trials if t.trial_index == row['trial_index']), None)
            if trial is None:
                raise ValidationError(
                    f"No session result for {row['session_id']} trial {row['trial_index']} "
                    f"to take presented/decoded digits from", 'results'
                )
            presented = presented if presented is not None else trial.presented.digits
            decoded = decoded if decoded is not None else trial.digit_sequence

        responses.append(AnnotatedResponse(
            presented=DigitTriplet.of(presented),
            spoken=tuple(row['spoken']),
            decoded=tuple(decoded),
            session_id=row['session_id'],
            trial_index=row['trial_index'],
            group=row.get('group'),
        ))
    return responses


class EvaluationHandler:
    """Build the per-participant evaluation report"""

    def __init__(self, policy: str = 'contiguous'):
        self.policy = policy

    def participant_summary(self, responses: Sequence[AnnotatedResponse],
                            result: Optional[SessionResult] = None) -> Dict[str, Any]:
        insertions = deletions = substitutions = reference = 0
        deletions_by_position: Dict[str, int] = {}
        substitutions_by_position: Dict[str, int] = {}
        insertions_by_slot = {'beginning': 0, 'middle': 0, 'end': 0}
        cases = OrderedDict((str(case), 0) for case in CASES)

        for response in responses:
            alignment = align_digits(response.spoken, response.decoded)
            insertions += alignment.insertions
            deletions += alignment.deletions
            substitutions += alignment.substitutions
            reference += alignment.reference_length
            for position, count in alignment.deletions_by_position.items():
                key = str(position + 1)
                deletions_by_position[key] = deletions_by_position.get(key, 0) + count
            for position, count in alignment.substitutions_by_position.items():
                key = str(position + 1)
                substitutions_by_position[key] = substitutions_by_position.get(key, 0) + count
            for slot, count in alignment.insertions_by_slot.items():
                insertions_by_slot[_slot_name(slot, alignment.reference_length)] += count
            cases[str(classify_case(response, self.policy))] += 1

        summary = {
            'n_responses': len(responses),
            'group': next((r.group for r in responses if r.group), None),
            'reference_digits': reference,
            'insertions': insertions,
            'deletions': deletions,
            'substitutions': substitutions,
            'wer': 100.0 * (insertions + deletions + substitutions) / reference if reference else None,
            'per_position': {
                'deletions': deletions_by_position,
                'substitutions': substitutions_by_position,
                'insertions_by_slot': insertions_by_slot,
            },
            'cases': dict(cases),
            'n_error_triplets': len(responses) - cases[NO_ERROR],
        }
        if result is not None:
            summary['srt_mean'] = result.srt_mean
            summary['srt_sd'] = result.srt_sd
            summary['total_presentations'] = result.total_presentations
            summary['duration_seconds'] = result.duration_seconds
        return summary

    def build_report(self, responses: Sequence[AnnotatedResponse],
                     results: Optional[Mapping[str, SessionResult]] = None,
                     compare: Optional[Tuple[str, str]] = None,
                     exclude: Iterable[str] = (),
                     inputs: Optional[Mapping[str, str]] = None,
                     seed: Optional[int] = None) -> Dict[str, Any]:
        """Evaluation report; ``inputs`` maps input file names to content digests"""
        if not responses:
            raise ValidationError("No annotated responses to evaluate", 'annotations')
        results = results or {}

        by_participant: Dict[str, List[AnnotatedResponse]] = OrderedDict()
        for response in sorted(responses, key=lambda r: (r.session_id, r.trial_index)):
            by_participant.setdefault(response.session_id, []).append(response)

        participants = {
            session_id: self.participant_summary(items, results.get(session_id))
            for session_id, items in by_participant.items()
        }
        logger.info(f"Evaluated {len(responses)} responses from {len(participants)} participants")

        counts = effect_counts(responses, self.policy)
        report: Dict[str, Any] = {
            'schema': EVALUATION_SCHEMA,
            'seed': seed,
            'config_hash': self.report_hash(inputs),
            'inputs': dict(sorted((inputs or {}).items())),
            'match_policy': self.policy,
            'participants': participants,
            'pooled_wer': compute_wer(responses),
            'effect_model': effect_model(counts).to_dict() if sum(map(sum, counts)) else None,
        }

        if compare:
            report['welch'] = self.compare_groups(participants, compare, exclude)
        return report

    def report_hash(self, inputs: Optional[Mapping[str, str]] = None) -> str:
        return config_hash({'match_policy': self.policy, 'inputs': dict(inputs or {})})

    def compare_groups(self, participants: Mapping[str, Dict[str, Any]], groups: Tuple[str, str],
                       exclude: Iterable[str] = ()) -> Dict[str, Any]:
        """Welch t-test on per-participant WERs of two named groups"""
        excluded = set(exclude)
        values = {name: [] for name in groups}
        for session_id, summary in participants.items():
            if session_id in excluded or summary['wer'] is None:
                continue
            if summary['group'] in values:
                values[summary['group']].append(summary['wer'])

        t, df, p = welch_t(values[groups[0]], values[groups[1]])
        logger.info(f"Welch t({df:.2f}) = {t:.2f}, p = {p:.3f} for {groups[0]} vs {groups[1]}")
        return {
            'groups': list(groups),
            'n': [len(values[groups[0]]), len(values[groups[1]])],
            'excluded': sorted(excluded),
            't': t,
            'df': df,
            'p': p,
        }


def create_evaluation_handler(policy: str = 'contiguous') -> EvaluationHandler:
    """Create evaluation handler instance"""
    return EvaluationHandler(policy=policy)
