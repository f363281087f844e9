"""Whitehead automorphisms, Whitehead minimisation and Whitehead graphs.

Second-kind automorphisms ``(x, Z)`` send a letter ``y`` other than
``x^{+-1}`` to ``x^[y in Z] y x^-[y^-1 in Z]``.  For a cyclic word the change
in cyclic length has the closed form ``cut(Z + {x}) - deg(x)`` computed in the
Whitehead graph, which is what the descent and the enumeration use; the
literal image is only built once an automorphism is chosen.
"""

from __future__ import annotations

import functools
import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .words import (
    InvalidInput,
    Word,
    canonical_rotation,
    cyclic_core,
    cyclic_reduce,
    free_reduce,
    letter_str,
    rank_of,
    support,
)


@dataclass(frozen=True)
class WhiteheadFirstKind:
    """``x_i -> x_{sigma(i)}^{eps_i}``; ``permutation[i-1]`` is ``sigma(i)``."""

    permutation: tuple
    signs: tuple

    def __post_init__(self):
        r = len(self.permutation)
        if sorted(self.permutation) != list(range(1, r + 1)):
            raise InvalidInput(f"not a permutation: {self.permutation}")
        if len(self.signs) != r or any(s not in (1, -1) for s in self.signs):
            raise InvalidInput(f"bad signs: {self.signs}")

    @property
    def rank(self) -> int:
        return len(self.permutation)

    def image(self, letter: int) -> Word:
        g = abs(letter)
        y = self.permutation[g - 1] * self.signs[g - 1]
        return (y,) if letter > 0 else (-y,)

    def inverse(self) -> "WhiteheadFirstKind":
        r = self.rank
        perm = [0] * r
        signs = [1] * r
        for i in range(r):
            j = self.permutation[i]
            perm[j - 1] = i + 1
            signs[j - 1] = self.signs[i]
        return WhiteheadFirstKind(tuple(perm), tuple(signs))

    def __str__(self):
        perm = ",".join(str(p) for p in self.permutation)
        signs = ",".join("+" if s > 0 else "-" for s in self.signs)
        return f"W1[{perm};{signs}]"


@dataclass(frozen=True)
class WhiteheadSecondKind:
    multiplier: int
    zset: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.multiplier in self.zset or -self.multiplier in self.zset:
            raise InvalidInput("Z must avoid the multiplier and its inverse")

    @property
    def rank(self) -> int:
        return max([abs(self.multiplier)] + [abs(z) for z in self.zset])

    def image(self, letter: int) -> Word:
        x = self.multiplier
        if letter == x or letter == -x:
            return (letter,)
        out = []
        if letter in self.zset:
            out.append(x)
        out.append(letter)
        if -letter in self.zset:
            out.append(-x)
        return tuple(out)

    def inverse(self) -> "WhiteheadSecondKind":
        return WhiteheadSecondKind(-self.multiplier, self.zset)

    def __str__(self):
        zs = "".join(letter_str(z) for z in sorted(self.zset))
        return f"W2[{letter_str(self.multiplier)};{zs}]"


WhiteheadAutomorphism = Union[WhiteheadFirstKind, WhiteheadSecondKind]


@dataclass(frozen=True)
class AutomorphismChain:
    steps: tuple = ()

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def apply(self, w: Sequence[int]) -> Word:
        for aut in self.steps:
            w = apply(aut, w)
        return tuple(w)

    def __str__(self):
        return " ".join(str(s) for s in self.steps)


def apply(aut: WhiteheadAutomorphism, w: Sequence[int], rank: int | None = None) -> Word:
    """Image of ``w`` under ``aut``, freely reduced."""
    if isinstance(aut, WhiteheadFirstKind):
        if rank is not None and rank != aut.rank:
            raise InvalidInput(f"automorphism of rank {aut.rank} applied in rank {rank}")
        if rank_of(w) > aut.rank:
            raise InvalidInput(f"word uses generators beyond rank {aut.rank}")
    elif rank is not None and (aut.rank > rank or rank_of(w) > rank):
        raise InvalidInput(f"rank mismatch with rank {rank}")
    raw: list[int] = []
    for y in w:
        raw.extend(aut.image(y))
    return free_reduce(raw)


def letters_in_order(rank: int) -> list[int]:
    return list(range(-rank, 0)) + list(range(1, rank + 1))


def enumerate_second_kind(rank: int) -> Iterator[WhiteheadSecondKind]:
    """All ``2r * 2^(2r-2)`` second-kind automorphisms, identity included.

    Multipliers run in base order; subsets follow a binary counter over the
    remaining letters in base order (least significant bit first).
    """
    letters = letters_in_order(rank)
    for x in letters:
        others = [y for y in letters if y != x and y != -x]
        for bits in range(1 << len(others)):
            z = frozenset(y for k, y in enumerate(others) if bits >> k & 1)
            yield WhiteheadSecondKind(x, z)


def enumerate_first_kind(rank: int) -> Iterator[WhiteheadFirstKind]:
    for perm in itertools.permutations(range(1, rank + 1)):
        for signs in itertools.product((1, -1), repeat=rank):
            yield WhiteheadFirstKind(perm, signs)


def vertex_index(letter: int, rank: int) -> int:
    """Position of a letter in base order, 0..2r-1."""
    return letter + rank if letter < 0 else letter + rank - 1


class _AutTable:
    """Second-kind automorphisms of one rank, as membership masks."""

    def __init__(self, rank: int):
        self.rank = rank
        self.auts = list(enumerate_second_kind(rank))
        n = 2 * rank
        self.masks = np.zeros((len(self.auts), n), dtype=bool)
        self.x_index = np.zeros(len(self.auts), dtype=np.intp)
        for k, aut in enumerate(self.auts):
            for y in aut.zset | {aut.multiplier}:
                self.masks[k, vertex_index(y, rank)] = True
            self.x_index[k] = vertex_index(aut.multiplier, rank)

    def deltas(self, w: Word) -> np.ndarray:
        """Change in cyclic length of cyclically reduced ``w`` under every aut."""
        r = self.rank
        n = len(w)
        u = np.fromiter((vertex_index(-w[i], r) for i in range(n)), np.intp, n)
        v = np.fromiter((vertex_index(w[(i + 1) % n], r) for i in range(n)), np.intp, n)
        cut = (self.masks[:, u] != self.masks[:, v]).sum(axis=1)
        deg = np.bincount(u, minlength=2 * r) + np.bincount(v, minlength=2 * r)
        return cut - deg[self.x_index]


@functools.lru_cache(maxsize=None)
def aut_table(rank: int) -> _AutTable:
    return _AutTable(rank)


def length_deltas(w: Sequence[int], rank: int) -> np.ndarray:
    """Cyclic-length change of cyclically reduced ``w`` per second-kind aut."""
    return aut_table(rank).deltas(tuple(w))


def _descend(core: Word, rank: int) -> tuple[Word, list]:
    table = aut_table(rank)
    steps = []
    while core:
        d = table.deltas(core)
        hits = np.flatnonzero(d < 0)
        if hits.size == 0:
            break
        aut = table.auts[hits[0]]
        steps.append(aut)
        core = cyclic_core(apply(aut, core))
    return core, steps


def whitehead_minimize(w: Sequence[int], rank: int | None = None) -> tuple[Word, AutomorphismChain]:
    """Greedy Whitehead descent to a minimal-length word in the Aut-orbit.

    Returns the canonical rotation of the minimal cyclic word together with
    the chain of second-kind automorphisms that was applied.
    """
    core = cyclic_core(w)
    r = rank if rank is not None else max(rank_of(core), 1)
    core, steps = _descend(core, r)
    return canonical_rotation(core), AutomorphismChain(tuple(steps))


def is_whitehead_minimal(w: Sequence[int], rank: int | None = None) -> bool:
    core = cyclic_core(w)
    if not core:
        return True
    r = rank if rank is not None else rank_of(core)
    return bool((aut_table(r).deltas(core) >= 0).all())


def is_primitive(w: Sequence[int]) -> bool:
    core = cyclic_core(w)
    if len(core) <= 1:
        return len(core) == 1
    m, _ = whitehead_minimize(core)
    return len(m) == 1


def minimal_free_factor_rank(w: Sequence[int]) -> int:
    """Rank of the smallest free factor containing ``w``.

    A Whitehead-minimal word uses exactly the generators of a basis of its
    minimal free factor (Whitehead's cut-vertex lemma), so this counts them.
    """
    m, _ = whitehead_minimize(w)
    return len(support(m))


@dataclass(frozen=True)
class WhiteheadGraph:
    """Graph on the letters ``X^{+-1}`` with an edge ``{x^-1, y}`` per cyclic
    adjacency ``x y`` of the source word."""

    rank: int
    edges: Counter
    reduced: bool = False

    @property
    def vertices(self) -> list[int]:
        return letters_in_order(self.rank)

    def edge_count(self) -> int:
        return sum(self.edges.values())

    def neighbours(self) -> dict:
        nb = {v: set() for v in self.vertices}
        for e in self.edges:
            x, y = tuple(e)
            nb[x].add(y)
            nb[y].add(x)
        return nb

    def has_parallel_edges(self) -> bool:
        return any(c > 1 for c in self.edges.values())

    def girth(self) -> float:
        """Length of a shortest cycle of the underlying simple graph."""
        nb = self.neighbours()
        best = float("inf")
        for s in self.vertices:
            dist = {s: 0}
            parent = {s: None}
            queue = [s]
            for u in queue:
                for v in nb[u]:
                    if v not in dist:
                        dist[v] = dist[u] + 1
                        parent[v] = u
                        queue.append(v)
                    elif parent[u] != v:
                        best = min(best, dist[u] + dist[v] + 1)
        return best

    def triangles(self) -> list[tuple]:
        nb = self.neighbours()
        vs = self.vertices
        out = []
        for i, x in enumerate(vs):
            for j in range(i + 1, len(vs)):
                y = vs[j]
                if y not in nb[x]:
                    continue
                for z in vs[j + 1 :]:
                    if z in nb[x] and z in nb[y]:
                        out.append((x, y, z))
        return out


def whitehead_graph(w: Sequence[int], reduced: bool = False, rank: int | None = None) -> WhiteheadGraph:
    w = tuple(w)
    if not w:
        raise InvalidInput("Whitehead graph of the trivial word")
    core, _ = cyclic_reduce(free_reduce(w))
    if len(core) != len(w):
        raise InvalidInput("Whitehead graph needs a cyclically reduced word")
    n = len(w)
    edges = Counter(frozenset((-w[i], w[(i + 1) % n])) for i in range(n))
    if reduced:
        edges = Counter({e: 1 for e in edges})
    return WhiteheadGraph(rank or rank_of(w), edges, reduced)
