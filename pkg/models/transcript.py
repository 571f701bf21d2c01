from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from utils.helpers import normalize_text, split_tokens, strip_punctuation
from utils.validators import AsrValidator, ValidationError, raise_for

TRANSCRIPT_SOURCES = ('external-asr', 'mock', 'manual-annotation')

DUTCH_DIGIT_WORDS: Dict[str, int] = {
    'nul': 0, '0': 0,
    'een': 1, 'één': 1, 'eén': 1, '1': 1,
    'twee': 2, '2': 2,
    'drie': 3, '3': 3,
    'vier': 4, '4': 4,
    'vijf': 5, '5': 5,
    'zes': 6, '6': 6,
    'zeven': 7, '7': 7,
    'acht': 8, '8': 8,
    'negen': 9, '9': 9,
}

# Spoken form of each digit, used by the tone decoder and simulated speakers
DIGIT_WORDS: Tuple[str, ...] = (
    'nul', 'een', 'twee', 'drie', 'vier', 'vijf', 'zes', 'zeven', 'acht', 'negen'
)

_UNITS = {'een': 1, 'twee': 2, 'drie': 3, 'vier': 4, 'vijf': 5, 'zes': 6, 'zeven': 7, 'acht': 8, 'negen': 9}
_TENS = {'twintig': 2, 'dertig': 3, 'veertig': 4, 'vijftig': 5, 'zestig': 6, 'zeventig': 7,
         'tachtig': 8, 'negentig': 9}
_TEENS = {'tien': (1, 0), 'elf': (1, 1), 'twaalf': (1, 2), 'dertien': (1, 3), 'veertien': (1, 4),
          'vijftien': (1, 5), 'zestien': (1, 6), 'zeventien': (1, 7), 'achttien': (1, 8),
          'negentien': (1, 9)}


def _build_compounds() -> Dict[str, Tuple[int, ...]]:
    """Two-digit Dutch numerals in written digit order ('vijfentwintig' -> 2, 5)"""
    table: Dict[str, Tuple[int, ...]] = dict(_TEENS)
    for tens_word, tens in _TENS.items():
        table[tens_word] = (tens, 0)
        for unit_word, unit in _UNITS.items():
            joiner = 'ën' if unit_word.endswith('e') else 'en'
            table[f'{unit_word}{joiner}{tens_word}'] = (tens, unit)
            table[f'{unit_word}en{tens_word}'] = (tens, unit)
    return table


DUTCH_COMPOUNDS: Dict[str, Tuple[int, ...]] = _build_compounds()


@dataclass(frozen=True)
class Transcript:
    tokens: Tuple[str, ...]
    source: str = 'external-asr'
    raw_output: str = ''

    def __post_init__(self):
        if self.source not in TRANSCRIPT_SOURCES:
            raise ValidationError(f'Unknown transcript source: {self.source}', 'source')
        for token in self.tokens:
            if not token or any(ch.isspace() for ch in token):
                raise ValidationError(f'Invalid transcript token: {token!r}', 'tokens')

    @classmethod
    def from_text(cls, text: str, source: str = 'external-asr') -> 'Transcript':
        return cls(tokens=tuple(split_tokens(text)), source=source, raw_output=text or '')


@dataclass(frozen=True)
class DigitLexicon:
    """Surface form -> digit map with case folding and optional compound expansion"""
    words: Mapping[str, int] = field(default_factory=lambda: dict(DUTCH_DIGIT_WORDS))
    expand_compounds: bool = False
    compounds: Mapping[str, Tuple[int, ...]] = field(default_factory=lambda: dict(DUTCH_COMPOUNDS))

    def __post_init__(self):
        covered = set(self.words.values())
        missing = [d for d in range(10) if d not in covered]
        if missing:
            raise ValidationError(f"Lexicon has no surface form for {', '.join(map(str, missing))}", 'words')
        for word, digit in self.words.items():
            if not isinstance(digit, int) or not 0 <= digit <= 9:
                raise ValidationError(f'Lexicon maps {word!r} to non-digit {digit!r}', 'words')

    def lookup(self, token: str) -> Tuple[int, ...]:
        """Digits for a token; () when the token is not a digit word"""
        key = strip_punctuation(normalize_text(token))
        if key in self.words:
            return (self.words[key],)
        if self.expand_compounds and key in self.compounds:
            return tuple(self.compounds[key])
        return ()


@dataclass(frozen=True)
class AsrBackendSpec:
    kind: str = 'mock-tone'
    command: Optional[str] = None
    working_dir: Optional[str] = None
    timeout: float = 30.0
    sample_rate: int = 16000

    def __post_init__(self):
        raise_for(AsrValidator.validate_backend(self.kind, self.command, self.timeout), 'asr')

    def describe(self) -> str:
        if self.kind == 'external-process':
            return f'external-process:{self.command}'
        return self.kind

    @classmethod
    def from_config(cls, config, kind: Optional[str] = None, command: Optional[str] = None,
                    timeout: Optional[float] = None) -> 'AsrBackendSpec':
        command = command or config.DIN_ASR_CMD
        if kind is None:
            kind = 'external-process' if command else 'mock-tone'
        return cls(
            kind=kind,
            command=command if kind == 'external-process' else None,
            working_dir=config.DIN_ASR_WORKDIR,
            timeout=timeout or config.DIN_ASR_TIMEOUT,
            sample_rate=config.DIN_ASR_SAMPLE_RATE,
        )
