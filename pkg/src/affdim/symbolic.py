"""Finite words over the alphabet {1..N}, target-cylinder sequences, return rules.

Words are immutable tuples of 1-based letters; the empty word stands for the
empty prefix. Target sequences produce the cylinder word for each index k,
return rules produce the recurrence depth psi(n).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Union

from .errors import BudgetExceededError

DEFAULT_WORD_BUDGET = 10**8


@dataclass(frozen=True)
class Word:
    """Finite word of 1-based letters; Word(()) is the empty word."""

    letters: tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(x) for x in self.letters)
        if any(x < 1 for x in letters):
            raise ValueError("word letters must be positive (1-based) integers")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, idx):
        picked = self.letters[idx]
        return Word(picked) if isinstance(idx, slice) else picked

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def prefix(self, k: int) -> "Word":
        return Word(self.letters[:k])

    def startswith(self, other: "Word") -> bool:
        return self.letters[: len(other)] == other.letters

    def reversed(self) -> "Word":
        return Word(self.letters[::-1])

    def __repr__(self):
        return f"Word({format_word(self)!r})"


EMPTY_WORD = Word(())


def format_word(word: Word, alphabet_size: int | None = None) -> str:
    """Serialize a word: digits glued together for N <= 9, else dot-separated."""
    n = alphabet_size if alphabet_size is not None else max(word.letters, default=1)
    if n <= 9:
        return "".join(str(x) for x in word.letters)
    return ".".join(str(x) for x in word.letters)


def parse_word(text: str) -> Word:
    text = text.strip()
    if not text:
        return EMPTY_WORD
    if "." in text:
        return Word(tuple(int(part) for part in text.split(".")))
    return Word(tuple(int(ch) for ch in text))


def enumerate_words(alphabet_size: int, length: int,
                    budget: int = DEFAULT_WORD_BUDGET) -> Iterator[Word]:
    """Yield all N^n words of the given length in lexicographic order."""
    if alphabet_size < 2:
        raise ValueError("alphabet size must be at least 2")
    if length < 0:
        raise ValueError("word length must be non-negative")
    total = alphabet_size**length
    if total > budget:
        raise BudgetExceededError(
            f"{alphabet_size}^{length} = {total} words exceeds budget {budget}"
        )
    for letters in itertools.product(range(1, alphabet_size + 1), repeat=length):
        yield Word(letters)


def common_prefix(u: Word, v: Word) -> Word:
    """Longest common prefix of two nonempty words.

    Identical words return the full word (the convention for equal finite
    words); words differing in the first letter return the empty word.
    """
    if not u or not v:
        raise ValueError("common_prefix requires nonempty words")
    n = 0
    for a, b in zip(u.letters, v.letters):
        if a != b:
            break
        n += 1
    return u.prefix(n)


@dataclass(frozen=True)
class ExplicitTargets:
    """Target cylinders given as a literal list indexed from k = 1."""

    words: tuple[Word, ...]

    declared_rate = None  # rate must be estimated from the data

    def __post_init__(self):
        if not self.words:
            raise ValueError("explicit target list must be nonempty")

    def length(self, k: int) -> int:
        return len(self.word(k))

    def word(self, k: int) -> Word:
        if k < 1 or k > len(self.words):
            raise IndexError(f"explicit target list has no index {k}")
        return self.words[k - 1]

    @property
    def max_index(self) -> int:
        return len(self.words)


@dataclass(frozen=True)
class LinearPatternTargets:
    """Cylinders of length max(1, round(rate*k)) read cyclically off a pattern."""

    pattern: Word
    rate: Fraction

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("pattern word must be nonempty")
        rate = Fraction(self.rate)
        if rate < 0:
            raise ValueError("rate must be non-negative")
        object.__setattr__(self, "rate", rate)

    @property
    def declared_rate(self) -> Fraction:
        return self.rate

    max_index = None

    def length(self, k: int) -> int:
        if k < 1:
            raise IndexError("target index starts at 1")
        return max(1, round(self.rate * k))

    def word(self, k: int) -> Word:
        m = len(self.pattern)
        return Word(tuple(self.pattern.letters[i % m] for i in range(self.length(k))))


@dataclass(frozen=True)
class DegenerateTargets:
    """Targets whose length schedule has declared rate 0 or infinity."""

    rate: float  # 0.0 or math.inf
    length_fn: Callable[[int], int]
    schedule_name: str = "custom"
    pattern: Word = Word((1,))

    def __post_init__(self):
        if self.rate not in (0.0, math.inf):
            raise ValueError("degenerate rate must be 0 or inf")

    @property
    def declared_rate(self) -> float:
        return self.rate

    max_index = None

    def length(self, k: int) -> int:
        if k < 1:
            raise IndexError("target index starts at 1")
        n = int(self.length_fn(k))
        return max(1, n)

    def word(self, k: int) -> Word:
        m = len(self.pattern)
        return Word(tuple(self.pattern.letters[i % m] for i in range(self.length(k))))

    @classmethod
    def sqrt_lengths(cls) -> "DegenerateTargets":
        return cls(0.0, _ceil_sqrt, "sqrt")

    @classmethod
    def square_lengths(cls) -> "DegenerateTargets":
        return cls(math.inf, lambda k: k * k, "square")


def _ceil_sqrt(k: int) -> int:
    r = math.isqrt(k)
    return r if r * r == k else r + 1


TargetSequence = Union[ExplicitTargets, LinearPatternTargets, DegenerateTargets]


def target_cylinder(spec: TargetSequence, k: int) -> Word:
    """The k-th target cylinder word of the sequence."""
    if k < 1:
        raise IndexError("target index starts at 1")
    return spec.word(k)


def pad_target(word: Word, p: int, buffer_len: int) -> Word:
    """Append ((p - |word|) mod (buffer_len + p)) copies of letter 1.

    The result has length congruent to p modulo buffer_len + p, which keeps
    target blocks aligned with the block/buffer period of measure trees.
    Negative residues are normalized into [0, buffer_len + p).
    """
    if p < 1:
        raise ValueError("block length p must be at least 1")
    if buffer_len < 0:
        raise ValueError("buffer length must be non-negative")
    count = (p - len(word)) % (buffer_len + p)
    return word + Word((1,) * count)


@dataclass(frozen=True)
class LinearFloorRule:
    """psi(n) = max(0, floor(rate*n) + offset)."""

    rate: Fraction
    offset: int = 0

    def __post_init__(self):
        rate = Fraction(self.rate)
        if rate < 0:
            raise ValueError("rate must be non-negative")
        object.__setattr__(self, "rate", rate)

    def value(self, n: int) -> int:
        if n < 1:
            raise IndexError("psi is defined for n >= 1")
        return max(0, math.floor(self.rate * n) + self.offset)

    @property
    def beta_exact(self) -> Fraction:
        return self.rate

    max_index = None


@dataclass(frozen=True)
class TableRule:
    """psi given by an explicit table of values psi(1), psi(2), ..."""

    values: tuple[int, ...]

    beta_exact = None

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if not values:
            raise ValueError("psi table must be nonempty")
        if any(v < 0 for v in values):
            raise ValueError("psi values must be non-negative integers")
        object.__setattr__(self, "values", values)

    def value(self, n: int) -> int:
        if n < 1 or n > len(self.values):
            raise IndexError(f"psi table has no entry for n = {n}")
        return self.values[n - 1]

    @property
    def max_index(self) -> int:
        return len(self.values)


ReturnRule = Union[LinearFloorRule, TableRule]
