import csv
import hashlib
import json
import logging
import os
import re
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from dateutil import parser as date_parser
from dateutil import tz

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def normalize_text(message: str) -> str:
    """Normalize text - trim whitespace and convert to lowercase"""
    if not message:
        return ""
    return message.strip().lower()


def split_tokens(text: str) -> List[str]:
    """Split decoder output into lowercase tokens on whitespace only"""
    if not text:
        return []
    return [token.lower() for token in text.split()]


def strip_punctuation(token: str) -> str:
    """Remove leading/trailing punctuation from a token (for lexicon lookup)"""
    return re.sub(r"^[^\w]+|[^\w]+$", "", token, flags=re.UNICODE)


def parse_digit_sequence(text: Optional[str]) -> Tuple[int, ...]:
    """Parse '5,2,8', '5 2 8' or '528' into (5, 2, 8); empty text gives ()"""
    if text is None:
        return ()
    if isinstance(text, (list, tuple)):
        return tuple(int(d) for d in text)
    cleaned = str(text).strip()
    if not cleaned or cleaned == '-':
        return ()
    if re.search(r"[^0-9,;\s]", cleaned):
        raise ValueError(f"Not a digit sequence: {text!r}")
    return tuple(int(ch) for ch in cleaned if ch.isdigit())


def format_digits(digits: Sequence[int]) -> str:
    """Format a digit sequence as '528'"""
    return ''.join(str(d) for d in digits)


def parse_error_range(text: str) -> List[int]:
    """Parse an error-count selection: '4', '0..23', '0,2,4' or '1..4,8'"""
    values: List[int] = []
    for part in str(text).split(','):
        part = part.strip()
        if not part:
            continue
        match = re.fullmatch(r"(-?\d+)\s*\.\.\s*(-?\d+)", part)
        if match:
            low, high = int(match.group(1)), int(match.group(2))
            if high < low:
                raise ValueError(f"Empty error range: {part}")
            values.extend(range(low, high + 1))
        else:
            values.append(int(part))
    if not values:
        raise ValueError("No error counts given")
    return sorted(set(values))


def hash_string(text: str) -> str:
    """Generate SHA256 hash of string"""
    return hashlib.sha256(text.encode()).hexdigest()


def file_digest(path: PathLike) -> str:
    """SHA256 of a file's bytes"""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def canonical_json(data: Any) -> str:
    """Serialise to JSON with a stable key order and no trailing whitespace"""
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False)


def config_hash(data: Dict[str, Any]) -> str:
    """Short stable hash of a configuration dictionary"""
    return hash_string(json.dumps(data, sort_keys=True, separators=(',', ':')))[:16]


def generate_session_id(prefix: str = "DIN", seed: Optional[int] = None, salt: str = "") -> str:
    """Generate a session identifier

    Seeded sessions get an identifier derived from the seed so that reruns
    produce identical artifacts.
    """
    if seed is not None:
        return f"{prefix}-{hash_string(f'{salt}:{seed}')[:12].upper()}"
    return f"{prefix}-{uuid.uuid4().hex[:12].upper()}"


def utc_now() -> datetime:
    """Current UTC time, pinned to SOURCE_DATE_EPOCH when that is set"""
    epoch = os.getenv('SOURCE_DATE_EPOCH')
    if epoch:
        return datetime.fromtimestamp(int(epoch), tz=tz.tzutc())
    return datetime.now(tz=tz.tzutc())


def isoformat(dt: datetime) -> str:
    return dt.astimezone(tz.tzutc()).isoformat()


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp from a result file"""
    return date_parser.isoparse(value)


def write_json(path: PathLike, data: Any) -> Path:
    """Write JSON artifact (UTF-8, sorted keys, newline terminated)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(data) + "\n", encoding='utf-8')
    logger.debug(f"Wrote {path}")
    return path


def read_json(path: PathLike) -> Any:
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    logger.debug(f"Wrote {path}")
    return path


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, 'r', encoding='utf-8', newline='') as handle:
        return [dict(row) for row in csv.DictReader(handle)]


def format_db(value: float, decimals: int = 2) -> str:
    """Format a dB value with explicit sign"""
    return f"{value:+.{decimals}f} dB"


def log_session_event(session_id: str, action: str, details: str = None):
    """Log session event for the audit trail"""
    log_message = f"Session {session_id} {action}"
    if details:
        log_message += f" - {details}"
    logger.info(log_message)
