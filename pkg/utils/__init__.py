# Utils package
from .helpers import (
    normalize_text, split_tokens, parse_digit_sequence, format_digits, parse_error_range,
    config_hash, generate_session_id, utc_now, isoformat, write_json, read_json,
    write_csv, read_csv, format_db, log_session_event
)
from .validators import (
    ValidationError, TripletValidator, StaircaseValidator, AsrValidator,
    AnnotationValidator, SimulationValidator, AudioValidator, raise_for
)
from .errors import DinError

__all__ = [
    # Helpers
    'normalize_text', 'split_tokens', 'parse_digit_sequence', 'format_digits', 'parse_error_range',
    'config_hash', 'generate_session_id', 'utc_now', 'isoformat', 'write_json', 'read_json',
    'write_csv', 'read_csv', 'format_db', 'log_session_event',

    # Validators
    'ValidationError', 'TripletValidator', 'StaircaseValidator', 'AsrValidator',
    'AnnotationValidator', 'SimulationValidator', 'AudioValidator', 'raise_for',

    # Errors
    'DinError'
]
