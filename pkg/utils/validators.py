import math
import re
from typing import Any, Dict, Iterable, Optional, Sequence
import logging

logger = logging.getLogger(__name__)

MATCH_POLICIES = ('exact', 'contiguous')
ASR_KINDS = ('external-process', 'mock-tone', 'scripted')
SUPPORTED_SAMPLE_RATES = (16000, 40000, 44100, 48000)
MAX_ERROR_COUNT = 23


class ValidationError(Exception):
    """Custom validation error"""

    code = 2

    def __init__(self, message: str, field: str = None):
        self.message = message
        self.field = field
        super().__init__(message)


def raise_for(validation: Dict[str, Any], field: str = None):
    """Raise ValidationError when a validator result is not valid"""
    if validation.get('valid'):
        return validation
    errors = validation.get('errors') or [validation.get('error', 'invalid value')]
    raise ValidationError('; '.join(errors), field)


class TripletValidator:
    """Digit triplet validators"""

    @staticmethod
    def validate_digits(digits: Sequence[Any]) -> Dict[str, Any]:
        """Validate a presented triplet: three distinct digits 0-9"""
        if digits is None or len(digits) != 3:
            return {'valid': False, 'error': 'A triplet has exactly three digits'}

        for digit in digits:
            if not isinstance(digit, int) or isinstance(digit, bool) or not 0 <= digit <= 9:
                return {'valid': False, 'error': f'Digit out of range: {digit!r}'}

        if len(set(digits)) != 3:
            return {'valid': False, 'error': 'Triplet digits must be pairwise distinct'}

        return {'valid': True, 'digits': tuple(digits)}

    @staticmethod
    def validate_sequence(digits: Sequence[Any]) -> Dict[str, Any]:
        """Validate a free digit sequence (annotation or decoder output)"""
        for digit in digits:
            if not isinstance(digit, int) or not 0 <= digit <= 9:
                return {'valid': False, 'error': f'Digit out of range: {digit!r}'}
        return {'valid': True, 'digits': tuple(digits)}


class StaircaseValidator:
    """Staircase configuration validators"""

    @staticmethod
    def validate_config(values: Dict[str, Any]) -> Dict[str, Any]:
        errors = []

        for name in ('start_snr', 'first_step_up', 'step', 'noise_level',
                     'speech_level_min', 'speech_level_max'):
            value = values.get(name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                errors.append(f'{name} must be a finite number')

        if errors:
            return {'valid': False, 'errors': errors}

        if not values['speech_level_min'] < values['noise_level'] < values['speech_level_max']:
            errors.append('speech_level_min < noise_level < speech_level_max is required')

        if values['step'] <= 0:
            errors.append('step must be positive')

        if values['first_step_up'] <= 0:
            errors.append('first_step_up must be positive')

        n_trials = values.get('n_trials')
        if not isinstance(n_trials, int) or n_trials < 2:
            errors.append('n_trials must be an integer >= 2')

        window_start = values.get('srt_window_start')
        if not isinstance(window_start, int) or window_start < 2:
            errors.append('srt_window_start must be an integer >= 2')
        elif isinstance(n_trials, int) and window_start > n_trials:
            errors.append('srt_window_start must not exceed n_trials')

        max_first = values.get('max_first_trial_presentations')
        if not isinstance(max_first, int) or max_first < 1:
            errors.append('max_first_trial_presentations must be a positive integer')

        if values.get('match_policy') not in MATCH_POLICIES:
            errors.append(f"match_policy must be one of {', '.join(MATCH_POLICIES)}")

        timeout = values.get('response_timeout', 1.0)
        if not isinstance(timeout, (int, float)) or timeout <= 0:
            errors.append('response_timeout must be positive')

        if errors:
            return {'valid': False, 'errors': errors}

        return {'valid': True}


class AsrValidator:
    """ASR backend validators"""

    @staticmethod
    def validate_backend(kind: str, command: Optional[str], timeout: float) -> Dict[str, Any]:
        errors = []

        if kind not in ASR_KINDS:
            errors.append(f"Unknown ASR backend kind: {kind}")

        if not isinstance(timeout, (int, float)) or timeout <= 0:
            errors.append('ASR timeout must be positive')

        if kind == 'external-process':
            if not command or not command.strip():
                errors.append('External ASR requires a command template')
            elif '{wav}' not in command:
                errors.append('ASR command template must contain the {wav} placeholder')

        if errors:
            return {'valid': False, 'errors': errors}

        return {'valid': True}


class AnnotationValidator:
    """Annotation row validators"""

    REQUIRED_FIELDS = ('session_id', 'trial_index', 'spoken')

    @staticmethod
    def validate_row(row: Dict[str, Any]) -> Dict[str, Any]:
        from utils.helpers import parse_digit_sequence

        errors = []
        for name in AnnotationValidator.REQUIRED_FIELDS:
            if name not in row or row[name] is None:
                errors.append(f'Missing column: {name}')

        if errors:
            return {'valid': False, 'errors': errors}

        data = {'session_id': str(row['session_id']).strip()}
        if not data['session_id']:
            errors.append('session_id is empty')

        try:
            data['trial_index'] = int(row['trial_index'])
        except (TypeError, ValueError):
            errors.append(f"trial_index is not an integer: {row['trial_index']!r}")

        for name in ('presented', 'spoken', 'decoded'):
            if name not in row or row[name] is None:
                data[name] = None
                continue
            try:
                data[name] = parse_digit_sequence(row[name])
            except ValueError as e:
                errors.append(f'{name}: {e}')

        data['group'] = (row.get('group') or '').strip() or None

        if errors:
            return {'valid': False, 'errors': errors}

        return {'valid': True, 'data': data}


class SimulationValidator:
    """Bootstrap simulation validators"""

    @staticmethod
    def validate_runs(n_runs: Any) -> Dict[str, Any]:
        if not isinstance(n_runs, int) or isinstance(n_runs, bool) or n_runs < 1:
            return {'valid': False, 'error': 'Number of runs must be a positive integer'}
        return {'valid': True, 'n_runs': n_runs}

    @staticmethod
    def validate_seed(seed: Any) -> Dict[str, Any]:
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            return {'valid': False, 'error': f'Seed must be a non-negative integer, got {seed!r}'}
        return {'valid': True, 'seed': seed}

    @staticmethod
    def validate_error_counts(values: Iterable[int], max_errors: int = MAX_ERROR_COUNT) -> Dict[str, Any]:
        values = list(values)
        if not values:
            return {'valid': False, 'error': 'No error counts given'}
        for value in values:
            if not 0 <= value <= max_errors:
                return {
                    'valid': False,
                    'error': f'Error count {value} outside 0..{max_errors} (only trials 2..24 are eligible)'
                }
        return {'valid': True, 'values': sorted(set(values))}


class AudioValidator:
    """Waveform and manifest validators"""

    @staticmethod
    def validate_sample_rate(sample_rate: Any) -> Dict[str, Any]:
        if sample_rate not in SUPPORTED_SAMPLE_RATES:
            return {'valid': False, 'error': f'Unsupported sample rate: {sample_rate}'}
        return {'valid': True}

    @staticmethod
    def validate_manifest(data: Dict[str, Any]) -> Dict[str, Any]:
        errors = []

        rate_check = AudioValidator.validate_sample_rate(data.get('sample_rate'))
        if not rate_check['valid']:
            errors.append(rate_check['error'])

        digits = data.get('digits') or {}
        missing = [d for d in range(10) if str(d) not in digits]
        if missing:
            errors.append(f"Manifest lacks digit assets for {', '.join(map(str, missing))}")

        for key, value in (data.get('corrections_db') or {}).items():
            if not re.fullmatch(r'[0-9]', str(key)):
                errors.append(f'Level correction for unknown digit {key!r}')
            elif not isinstance(value, (int, float)) or not math.isfinite(value):
                errors.append(f'Level correction for digit {key} must be finite')

        if not data.get('noise_tokens'):
            errors.append('Manifest lists no noise tokens')

        if errors:
            return {'valid': False, 'errors': errors}

        return {'valid': True}
