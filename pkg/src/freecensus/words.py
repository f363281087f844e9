"""Freely reduced words in a free group of finite rank.

A letter is a nonzero int: generator ``g`` is ``g`` and its inverse is ``-g``.
A word is a tuple of letters.  Integer order on letters is exactly the base
order ``-r < ... < -1 < 1 < ... < r`` used for shortlex comparison, so two
words of equal length compare correctly as plain tuples.

Text encoding: generators 1..4 are ``a b c d`` and their inverses ``A B C D``.
Larger generators use ``x5`` / ``X5`` tokens.
"""

from __future__ import annotations

import re
from typing import Iterable, NamedTuple, Sequence

MAX_RANK = 8

Word = tuple  # tuple[int, ...]

_ALPHA = "abcd"
_TOKEN = re.compile(r"[xX](\d+)|([a-dA-D])|(\S)")


class InvalidInput(ValueError):
    """A word, letter or rank that violates an operation's contract."""


def check_rank(rank: int) -> int:
    if not 1 <= rank <= MAX_RANK:
        raise InvalidInput(f"rank must be in 1..{MAX_RANK}, got {rank}")
    return rank


def letter_str(letter: int) -> str:
    g = abs(letter)
    if g <= 4:
        ch = _ALPHA[g - 1]
        return ch if letter > 0 else ch.upper()
    return f"x{g}" if letter > 0 else f"X{g}"


def format_word(w: Iterable[int]) -> str:
    return "".join(letter_str(x) for x in w)


def parse_letters(text: str) -> list[int]:
    """Parse text into a raw (not necessarily reduced) letter list."""
    out = []
    for m in _TOKEN.finditer(text.strip()):
        num, ch, bad = m.groups()
        if bad is not None:
            raise InvalidInput(f"unrecognised letter {bad!r} in {text!r}")
        if num is not None:
            g = int(num)
            if g == 0:
                raise InvalidInput("generator index must be positive")
            out.append(g if m.group(0)[0] == "x" else -g)
        else:
            g = _ALPHA.index(ch.lower()) + 1
            out.append(g if ch.islower() else -g)
    return out


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse and freely reduce a word in the ASCII encoding."""
    return free_reduce(parse_letters(text), rank)


def free_reduce(raw: Sequence[int], rank: int | None = None) -> Word:
    stack: list[int] = []
    for x in raw:
        if x == 0 or (rank is not None and abs(x) > rank):
            raise InvalidInput(f"letter {x} is not a letter of F_{rank}")
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def multiply(*words: Sequence[int]) -> Word:
    raw: list[int] = []
    for w in words:
        raw.extend(w)
    return free_reduce(raw)


def power(w: Sequence[int], k: int) -> Word:
    if k < 0:
        return power(inverse(w), -k)
    return free_reduce(tuple(w) * k)


def rank_of(w: Sequence[int]) -> int:
    """Largest generator index occurring in ``w`` (0 for the empty word)."""
    return max((abs(x) for x in w), default=0)


def support(w: Sequence[int]) -> frozenset:
    return frozenset(abs(x) for x in w)


def occurrence_count(w: Sequence[int], g: int) -> int:
    """Number of occurrences of generator ``g`` or its inverse in ``w``."""
    return sum(1 for x in w if x == g or x == -g)


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    return is_reduced(w) and (len(w) < 2 or w[0] != -w[-1])


def cyclic_reduce(w: Sequence[int]) -> tuple[Word, Word]:
    """Split a reduced word as ``conjugator * core * conjugator^-1``.

    The core is returned as it sits inside ``w`` (not rotated), so the
    reassembly is literal.
    """
    w = tuple(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return w[i : j + 1], w[:i]


def cyclic_core(w: Sequence[int]) -> Word:
    return cyclic_reduce(free_reduce(w))[0]


def cyclic_length(w: Sequence[int]) -> int:
    return len(cyclic_core(w))


def canonical_rotation(w: Sequence[int]) -> Word:
    """Shortlex-least rotation of a cyclically reduced word."""
    w = tuple(w)
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def cyclic_word(w: Sequence[int]) -> Word:
    """Canonical representative of the conjugacy class of ``w``."""
    return canonical_rotation(cyclic_core(w))


def shortlex_key(w: Sequence[int]) -> tuple:
    return (len(w), tuple(w))


def shortlex_compare(u: Sequence[int], v: Sequence[int]) -> int:
    """Return -1, 0 or 1 as ``u`` precedes, equals or follows ``v``."""
    ku, kv = shortlex_key(u), shortlex_key(v)
    return (ku > kv) - (ku < kv)


class PowerDecomposition(NamedTuple):
    root: Word
    exponent: int


def _primitive_period(core: Word) -> int:
    n = len(core)
    for d in range(1, n):
        if n % d == 0 and all(core[i] == core[i + d] for i in range(n - d)):
            return d
    return n


def power_decompose(w: Sequence[int]) -> PowerDecomposition:
    """Write ``w`` as ``root ** exponent`` with the exponent maximal."""
    w = free_reduce(w)
    if not w:
        raise InvalidInput("the trivial word has no root")
    core, conj = cyclic_reduce(w)
    d = _primitive_period(core)
    root = conj + core[:d] + inverse(conj)
    return PowerDecomposition(root, len(core) // d)


def is_proper_power(w: Sequence[int]) -> bool:
    w = free_reduce(w)
    return bool(w) and power_decompose(w).exponent > 1
