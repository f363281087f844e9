"""Orbit representatives of cyclic subgroups via the SLPCI+- graph.

A *reading* of a cyclic word is a rotation of it or of its inverse.  The
lexicographically least image of a reading under permutation and inversion
of generators is obtained greedily: each generator, at its first occurrence,
is sent to the smallest letter still unused (``-r``, then ``-(r-1)``, ...).
So a word is SLPCI+- minimal iff it equals its own relabelling and no reading
relabels to something smaller; the second test is decided by prefixes, which
is what lets the odometer skip whole ranges.
"""

from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .whitehead import aut_table, letters_in_order
from .words import (
    InvalidInput,
    Word,
    check_rank,
    cyclic_reduce,
    free_reduce,
    is_cyclically_reduced,
    rank_of,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PciClassSpec:
    include_group_inverse: bool = True


PCI = PciClassSpec(False)
PCI_PM = PciClassSpec(True)


@dataclass(frozen=True)
class ShardSpec:
    total_shards: int = 1
    shard_index: int = 0
    prefix_depth: int = 6

    def __post_init__(self):
        if self.total_shards < 1 or not 0 <= self.shard_index < self.total_shards:
            raise InvalidInput(f"bad shard {self.shard_index}/{self.total_shards}")
        if self.prefix_depth < 1:
            raise InvalidInput("prefix_depth must be positive")

    def owns(self, prefix: Sequence[int], rank: int) -> bool:
        if self.total_shards == 1:
            return True
        ordinal = 0
        for x in prefix[: self.prefix_depth]:
            ordinal = ordinal * 2 * rank + (x + rank if x < 0 else x + rank - 1)
        return ordinal % self.total_shards == self.shard_index


def relabel(seq: Sequence[int], rank: int) -> Word:
    """Least image of ``seq`` under permutations and inversions of generators."""
    image = [0] * (rank + 1)
    nxt = rank
    out = []
    for x in seq:
        g = x if x > 0 else -x
        m = image[g]
        if m == 0:
            m = image[g] = -nxt if x > 0 else nxt
            nxt -= 1
        out.append(m if x > 0 else -m)
    return tuple(out)


def readings(w: Sequence[int], include_inverse: bool = True) -> Iterator[Word]:
    w = tuple(w)
    n = len(w)
    for s in range(n):
        yield w[s:] + w[:s]
    if include_inverse:
        inv = tuple(-x for x in reversed(w))
        for s in range(n):
            yield inv[s:] + inv[:s]


def has_smaller_reading(w: Sequence[int], target: Sequence[int], rank: int,
                        include_inverse: bool = True) -> bool:
    """Does some relabelled reading of cyclic ``w`` precede ``target``?

    Both have the same length.  Each reading is relabelled letter by letter
    and abandoned at its first disagreement with ``target``.
    """
    n = len(w)
    directions = (1, -1) if include_inverse else (1,)
    for d in directions:
        for s in range(n):
            image = [0] * (rank + 1)
            nxt = rank
            for i in range(n):
                x = w[(s + i) % n] if d == 1 else -w[(s - i) % n]
                g = x if x > 0 else -x
                m = image[g]
                if m == 0:
                    m = image[g] = -nxt if x > 0 else nxt
                    nxt -= 1
                y = m if x > 0 else -m
                t = target[i]
                if y < t:
                    return True
                if y > t:
                    break
    return False


def min_reading(w: Sequence[int], rank: int, include_inverse: bool = True) -> Word:
    """Least relabelled reading of cyclic ``w``; readings are cut off as soon
    as they exceed the best found so far."""
    n = len(w)
    best = None
    for d in ((1, -1) if include_inverse else (1,)):
        for s in range(n):
            image = [0] * (rank + 1)
            nxt = rank
            out = []
            less = best is None
            for i in range(n):
                x = w[(s + i) % n] if d == 1 else -w[(s - i) % n]
                g = x if x > 0 else -x
                m = image[g]
                if m == 0:
                    m = image[g] = -nxt if x > 0 else nxt
                    nxt -= 1
                y = m if x > 0 else -m
                if not less:
                    b = best[i]
                    if y > b:
                        break
                    if y < b:
                        less = True
                out.append(y)
            else:
                if less:
                    best = out
    return tuple(best) if best is not None else ()


def slpci_minimal_rep(w: Sequence[int], rank: int | None = None,
                      spec: PciClassSpec = PCI_PM) -> Word:
    w = tuple(w)
    if not w:
        raise InvalidInput("SLPCI representative of the trivial word")
    if not is_cyclically_reduced(w):
        raise InvalidInput("SLPCI representative needs a cyclically reduced word")
    r = rank if rank is not None else rank_of(w)
    return min_reading(w, r, spec.include_group_inverse)


def is_slpci_minimal(w: Sequence[int], rank: int | None = None,
                     spec: PciClassSpec = PCI_PM) -> bool:
    """Subword test: no relabelled reading of ``w`` precedes ``w``."""
    w = tuple(w)
    r = rank if rank is not None else rank_of(w)
    return not has_smaller_reading(w, w, r, spec.include_group_inverse)


class Odometer:
    """Letter sequences of fixed length in increasing lexicographic order.

    Digit ``i`` indexes the base order ``-r < ... < -1 < 1 < ... < r``.
    ``increment(pos)`` advances position ``pos`` (carrying leftwards) and
    resets every later position to the least letter, skipping all sequences
    that share the current prefix up to ``pos``.
    """

    def __init__(self, rank: int, length: int, start: Sequence[int] | None = None):
        self.rank = check_rank(rank)
        self.length = length
        self.letters = letters_in_order(rank)
        self.base = 2 * rank
        if start is None:
            self.digits = [0] * length
        else:
            if len(start) != length:
                raise InvalidInput("odometer start has the wrong length")
            self.digits = [self.letters.index(x) for x in start]
        self.exhausted = False

    def current(self) -> list[int]:
        return [self.letters[d] for d in self.digits]

    def letter(self, pos: int) -> int:
        return self.letters[self.digits[pos]]

    def increment(self, pos: int) -> int:
        """Advance at ``pos``; returns the leftmost changed position or -1."""
        digits = self.digits
        while pos >= 0 and digits[pos] == self.base - 1:
            pos -= 1
        if pos < 0:
            self.exhausted = True
            return -1
        digits[pos] += 1
        for i in range(pos + 1, self.length):
            digits[i] = 0
        return pos


def _slpci_words(rank: int, length: int, spec: PciClassSpec = PCI_PM,
                 shard: ShardSpec | None = None,
                 start_after: Sequence[int] | None = None) -> Iterator[Word]:
    """Cyclically reduced SLPCI(+-) minimal words of one length, in order.

    For every prefix position ``k`` the odometer tracks the forward readings
    still tied with the prefix (start ``j`` with its partial relabelling);
    backward readings ending at ``k`` are rescanned.  A reading that relabels
    below the prefix falsifies every word sharing ``p[0..k]``, so the
    odometer increments at ``k``.
    """
    r = rank
    odo = Odometer(rank, length, start_after)
    inv = spec.include_group_inverse
    letters = odo.letters
    digits = odo.digits
    p = [0] * length
    tied: list[list] = [None] * length  # type: ignore[list-item]
    shard_depth = None
    if shard is not None and shard.total_shards > 1:
        shard_depth = min(shard.prefix_depth, length) - 1
    skip_upto = tuple(start_after) if start_after is not None else None
    k = 0
    while True:
        if k == length:
            w = tuple(p)
            if w[-1] != -w[0] and not has_smaller_reading(w, w, r, inv):
                if skip_upto is None or w > skip_upto:
                    yield w
            k = odo.increment(length - 1)
            if k < 0:
                return
            continue
        x = letters[digits[k]]
        p[k] = x
        ok = k == 0 or x != -p[k - 1]
        if ok:
            prev = tied[k - 1] if k > 0 else []
            cur = []
            for j, image, nxt in prev + [(k, None, r)]:
                if image is None:
                    image = (0,) * (r + 1)
                g = x if x > 0 else -x
                m = image[g]
                if m == 0:
                    m = -nxt if x > 0 else nxt
                    image = image[:g] + (m,) + image[g + 1:]
                    nxt -= 1
                y = m if x > 0 else -m
                t = p[k - j]
                if y < t:
                    ok = False
                    break
                if y == t:
                    cur.append((j, image, nxt))
            tied[k] = cur
        if ok and inv:
            image = [0] * (r + 1)
            nxt = r
            for i in range(k + 1):
                xx = -p[k - i]
                g = xx if xx > 0 else -xx
                m = image[g]
                if m == 0:
                    m = image[g] = -nxt if xx > 0 else nxt
                    nxt -= 1
                y = m if xx > 0 else -m
                if y < p[i]:
                    ok = False
                    break
                if y > p[i]:
                    break
        if ok and k == shard_depth and not shard.owns(p, r):  # type: ignore[union-attr]
            ok = False
        if ok:
            k += 1
        else:
            k = odo.increment(k)
            if k < 0:
                return


def is_whitehead_minimal_fast(w: Word, rank: int) -> bool:
    return bool((aut_table(rank).deltas(w) >= 0).all())


def enumerate_candidates(rank: int, length: int, shard: ShardSpec | None = None,
                         start_after: Sequence[int] | None = None) -> Iterator[Word]:
    """Cyclically reduced, SLPCI+- minimal, Whitehead minimal words."""
    check_rank(rank)
    if length < 1:
        raise InvalidInput("length must be at least 1")
    table = aut_table(rank)
    for w in _slpci_words(rank, length, PCI_PM, shard, start_after):
        if (table.deltas(w) >= 0).all():
            yield w


@dataclass(frozen=True)
class OrbitComponent:
    members: frozenset
    minimum: Word

    @property
    def size(self) -> int:
        return len(self.members)


def _neighbour_images(u: Word, rank: int) -> Iterator[Word]:
    """Cyclic cores of the length-preserving second-kind images of ``u``."""
    table = aut_table(rank)
    deltas = table.deltas(u)
    n_other = 2 * rank - 2
    full = (1 << n_other) - 1
    for k in np.flatnonzero(deltas == 0):
        bits = k & full
        if bits == 0 or bits == full:
            continue  # identity, or conjugation by the multiplier
        aut = table.auts[k]
        raw = []
        for y in u:
            raw.extend(aut.image(y))
        img = free_reduce(raw)
        yield cyclic_reduce(img)[0]


def explore_component(w: Sequence[int], rank: int | None = None,
                      early_exit: bool = True) -> tuple[bool, OrbitComponent | None]:
    """Breadth-first search of the SLPCI+- graph component of ``w``.

    With ``early_exit`` the search returns ``(False, None)`` as soon as a
    vertex preceding ``w`` is met; otherwise ``(True, component)`` with ``w``
    its minimum.  Without it the whole component is always returned.
    """
    w = tuple(w)
    r = rank if rank is not None else rank_of(w)
    visited = {w}
    queue = deque([w])
    is_min = True
    while queue:
        u = queue.popleft()
        for img in set(_neighbour_images(u, r)):
            c = min_reading(img, r)
            if c < w:
                if early_exit:
                    return False, None
                is_min = False
            if c not in visited:
                visited.add(c)
                queue.append(c)
    comp = OrbitComponent(frozenset(visited), min(visited))
    return is_min, comp


def enumerate_orbit_reps(rank: int, length: int, full_support_only: bool = True,
                         shard: ShardSpec | None = None) -> Iterator[Word]:
    for w, _ in enumerate_orbit_components(rank, length, full_support_only, shard):
        yield w


def enumerate_orbit_components(rank: int, length: int, full_support_only: bool = True,
                               shard: ShardSpec | None = None,
                               start_after: Sequence[int] | None = None) -> Iterator[tuple[Word, OrbitComponent]]:
    for w in enumerate_candidates(rank, length, shard, start_after):
        if full_support_only and len({abs(x) for x in w}) != rank:
            continue
        is_min, comp = explore_component(w, rank)
        if is_min:
            yield w, comp


def component_size_histogram(rank: int, length: int, shard: ShardSpec | None = None) -> Counter:
    """Sizes of all components of the length-``length`` SLPCI+- graph."""
    hist: Counter = Counter()
    for _, comp in enumerate_orbit_components(rank, length, False, shard):
        hist[comp.size] += 1
    return hist


def largest_component_formula(length: int) -> int:
    """Size of the largest rank-3 component, ``(L-7)/2 ((L-7)^2 + 11(L-7) + 30)``."""
    m = length - 7
    return m * (m * m + 11 * m + 30) // 2
