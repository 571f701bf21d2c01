import csv
import itertools
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from utils.helpers import format_digits, parse_digit_sequence, read_json
from utils.validators import TripletValidator, ValidationError, raise_for

TRIPLETS_PER_LIST = 24
N_BUILTIN_LISTS = 10
POOL_SIZE = 120
# Fixed seed for the placeholder lists; changing it changes every built-in list
_LIST_SEED = 2013


@dataclass(frozen=True)
class DigitTriplet:
    d1: int
    d2: int
    d3: int

    def __post_init__(self):
        raise_for(TripletValidator.validate_digits((self.d1, self.d2, self.d3)), 'triplet')

    @property
    def digits(self) -> Tuple[int, int, int]:
        return (self.d1, self.d2, self.d3)

    @classmethod
    def of(cls, digits: Sequence[int]) -> 'DigitTriplet':
        digits = tuple(int(d) for d in digits)
        raise_for(TripletValidator.validate_digits(digits), 'triplet')
        return cls(*digits)

    @classmethod
    def parse(cls, text: str) -> 'DigitTriplet':
        """Parse '5,2,8' or '528'"""
        try:
            digits = parse_digit_sequence(text)
        except ValueError as e:
            raise ValidationError(str(e), 'triplet')
        return cls.of(digits)

    def __str__(self) -> str:
        return format_digits(self.digits)


@dataclass(frozen=True)
class TripletList:
    list_id: str
    triplets: Tuple[DigitTriplet, ...]

    def __post_init__(self):
        if len(self.triplets) != TRIPLETS_PER_LIST:
            raise ValidationError(
                f'List {self.list_id} has {len(self.triplets)} triplets, expected {TRIPLETS_PER_LIST}',
                'triplets'
            )

    def __len__(self) -> int:
        return len(self.triplets)

    def __getitem__(self, index: int) -> DigitTriplet:
        return self.triplets[index]

    def to_dict(self) -> Dict[str, Any]:
        return {'list_id': self.list_id, 'triplets': [str(t) for t in self.triplets]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TripletList':
        if 'triplets' not in data:
            raise ValidationError('List file lacks "triplets"', 'triplets')
        return cls(
            list_id=str(data.get('list_id', 'custom')),
            triplets=tuple(DigitTriplet.parse(str(t)) for t in data['triplets'])
        )

    @classmethod
    def load(cls, path) -> 'TripletList':
        """Load a list from JSON ({"list_id", "triplets"}) or CSV (one triplet per row)"""
        path = Path(path)
        if not path.exists():
            raise ValidationError(f'List file not found: {path}', 'list')

        if path.suffix.lower() == '.json':
            return cls.from_dict(read_json(path))

        with open(path, 'r', encoding='utf-8', newline='') as handle:
            rows = [row for row in csv.reader(handle) if row and row[0].strip()]
        if rows and not any(ch.isdigit() for ch in rows[0][0]):
            rows = rows[1:]
        return cls(
            list_id=path.stem,
            triplets=tuple(DigitTriplet.parse(''.join(row)) for row in rows)
        )


@lru_cache(maxsize=1)
def triplet_pool() -> Tuple[DigitTriplet, ...]:
    """120 unique triplets of three distinct digits (deterministic placeholder pool)"""
    candidates = list(itertools.permutations(range(10), 3))
    rng = np.random.default_rng(_LIST_SEED)
    chosen = rng.choice(len(candidates), size=POOL_SIZE, replace=False)
    return tuple(DigitTriplet(*candidates[i]) for i in sorted(chosen))


@lru_cache(maxsize=1)
def builtin_lists() -> Tuple[TripletList, ...]:
    """Ten lists of 24 triplets drawn from the pool"""
    pool = triplet_pool()
    rng = np.random.default_rng(_LIST_SEED + 1)
    lists: List[TripletList] = []
    for number in range(1, N_BUILTIN_LISTS + 1):
        picks = rng.choice(len(pool), size=TRIPLETS_PER_LIST, replace=False)
        lists.append(TripletList(list_id=str(number), triplets=tuple(pool[i] for i in picks)))
    return tuple(lists)


def get_builtin_list(number: int) -> TripletList:
    if not 1 <= number <= N_BUILTIN_LISTS:
        raise ValidationError(f'List number must be 1..{N_BUILTIN_LISTS}, got {number}', 'list')
    return builtin_lists()[number - 1]
