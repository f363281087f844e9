"""Stallings graphs and the imprimitivity rank search.

Edges are triples ``(src, dst, g)`` with ``g`` a positive generator; reading
the letter ``-g`` traverses such an edge backwards.  Graphs are stored in a
canonical numbering (breadth first from the base, letters in base order), so
two graphs of the same subgroup compare equal.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .whitehead import is_primitive, letters_in_order, minimal_free_factor_rank
from .words import (
    InvalidInput,
    Word,
    cyclic_core,
    format_word,
    free_reduce,
    inverse,
    occurrence_count,
    power_decompose,
    rank_of,
)

INFINITY = math.inf


class PreconditionError(InvalidInput):
    """An operation was called outside its documented domain."""


@dataclass(frozen=True)
class StallingsGraph:
    num_vertices: int
    edges: tuple
    base: int = 0

    @functools.cached_property
    def _adjacency(self) -> tuple[dict, dict]:
        out, inn = {}, {}
        for k, (s, d, g) in enumerate(self.edges):
            out[s, g] = (d, k)
            inn[d, g] = (s, k)
        return out, inn

    @property
    def rank(self) -> int:
        return graph_rank(self)

    @property
    def label_rank(self) -> int:
        return max((g for _, _, g in self.edges), default=0)

    def step(self, v: int, letter: int):
        """Follow ``letter`` from ``v``: ``(vertex, edge index)`` or None."""
        out, inn = self._adjacency
        if letter > 0:
            return out.get((v, letter))
        return inn.get((v, -letter))

    def read(self, w: Sequence[int], start: int | None = None):
        v = self.base if start is None else start
        for x in w:
            nxt = self.step(v, x)
            if nxt is None:
                return None
            v = nxt[0]
        return v

    @functools.cached_property
    def spanning_tree(self) -> tuple[dict, frozenset]:
        """Words labelling tree paths from the base, and the tree edge set."""
        labels = letters_in_order(self.label_rank)
        path = {self.base: ()}
        tree = set()
        queue = [self.base]
        for v in queue:
            for x in labels:
                nxt = self.step(v, x)
                if nxt is not None and nxt[0] not in path:
                    path[nxt[0]] = path[v] + (x,)
                    tree.add(nxt[1])
                    queue.append(nxt[0])
        return path, frozenset(tree)

    def basis_edges(self) -> list[int]:
        _, tree = self.spanning_tree
        return [k for k in range(len(self.edges)) if k not in tree]

    def basis_words(self) -> list[Word]:
        """Free basis of the subgroup: one loop per non-tree edge."""
        path, _ = self.spanning_tree
        words = []
        for k in self.basis_edges():
            s, d, g = self.edges[k]
            words.append(free_reduce(path[s] + (g,) + inverse(path[d])))
        return words

    def to_text(self) -> str:
        return "\n".join(f"{s} {d} {g}" for s, d, g in self.edges)

    @classmethod
    def from_text(cls, text: str) -> "StallingsGraph":
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if line:
                s, d, g = (int(t) for t in line.split())
                edges.append((s, d, g))
        n = 1 + max((max(s, d) for s, d, _ in edges), default=0)
        return fold(n, edges)


def _canonical(num_vertices: int, edges: Iterable[tuple], base: int) -> StallingsGraph:
    edges = list(set(edges))
    out = {(s, g): d for s, d, g in edges}
    inn = {(d, g): s for s, d, g in edges}
    r = max((g for _, _, g in edges), default=0)
    labels = letters_in_order(r)
    order = {base: 0}
    queue = [base]
    for v in queue:
        for x in labels:
            u = out.get((v, x)) if x > 0 else inn.get((v, -x))
            if u is not None and u not in order:
                order[u] = len(order)
                queue.append(u)
    if any(s not in order or d not in order for s, d, _ in edges):
        raise InvalidInput("graph is not connected")
    new = sorted((order[s], order[d], g) for s, d, g in edges)
    return StallingsGraph(len(order), tuple(new), 0)


def fold(num_vertices: int, edges: Iterable[tuple], base: int = 0) -> StallingsGraph:
    """Stallings folding: identify same-label edges at a common vertex."""
    parent = list(range(num_vertices))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    edges = set(edges)
    while True:
        edges = {(find(s), find(d), g) for s, d, g in edges}
        out, inn = {}, {}
        merge = None
        for s, d, g in sorted(edges):
            if (s, g) in out and out[s, g] != d:
                merge = (out[s, g], d)
                break
            if (d, g) in inn and inn[d, g] != s:
                merge = (inn[d, g], s)
                break
            out[s, g] = d
            inn[d, g] = s
        if merge is None:
            break
        a, b = merge
        parent[max(a, b)] = min(a, b)
    if not edges:
        return StallingsGraph(1, (), 0)
    return _canonical(num_vertices, edges, find(base))


def trim(g: StallingsGraph) -> StallingsGraph:
    """Core of a folded graph: repeatedly drop non-base vertices of degree 1."""
    edges = list(g.edges)
    while True:
        deg = [0] * g.num_vertices
        for s, d, _ in edges:
            deg[s] += 1
            deg[d] += 1
        keep = [e for e in edges if (deg[e[0]] > 1 or e[0] == g.base) and (deg[e[1]] > 1 or e[1] == g.base)]
        if len(keep) == len(edges):
            break
        edges = keep
    if not edges:
        return StallingsGraph(1, (), 0)
    return _canonical(g.num_vertices, edges, g.base)


def subgroup_graph(generators: Iterable[Sequence[int]]) -> StallingsGraph:
    """Stallings graph of the subgroup generated by ``generators``."""
    edges = []
    n = 1
    for w in generators:
        w = free_reduce(w)
        if not w:
            continue
        prev = 0
        for i, x in enumerate(w):
            nxt = 0 if i == len(w) - 1 else n
            if nxt:
                n += 1
            edges.append((prev, nxt, x) if x > 0 else (nxt, prev, -x))
            prev = nxt
    return trim(fold(n, edges))


def contains_loop(g: StallingsGraph, w: Sequence[int]) -> bool:
    return g.read(w) == g.base


def graph_rank(g: StallingsGraph) -> int:
    return len(g.edges) - g.num_vertices + 1


def express_in_basis(g: StallingsGraph, w: Sequence[int]) -> Word:
    """Rewrite the ``w``-loop in the basis dual to the non-tree edges.

    Non-tree edges, in edge order, become generators ``1..rank``.
    """
    index = {k: i + 1 for i, k in enumerate(g.basis_edges())}
    v = g.base
    out = []
    for x in w:
        nxt = g.step(v, x)
        if nxt is None:
            raise PreconditionError(f"{format_word(w)} is not in the subgroup")
        v, k = nxt
        if k in index:
            out.append(index[k] if x > 0 else -index[k])
    if v != g.base:
        raise PreconditionError(f"{format_word(w)} is not in the subgroup")
    return free_reduce(out)


def is_imprimitive_in(g: StallingsGraph, w: Sequence[int]) -> bool:
    image = express_in_basis(g, w)
    return bool(image) and not is_primitive(image)


def is_subgroup(h: StallingsGraph, k: StallingsGraph) -> bool:
    """Is the subgroup of ``h`` contained in that of ``k``?"""
    return all(contains_loop(k, b) for b in h.basis_words())


@dataclass(frozen=True)
class IrankReport:
    """``value`` is exact unless ``exact`` is False, in which case the true
    imprimitivity rank is at least ``value`` (the search was capped)."""

    value: float
    witnesses: tuple = ()
    witness_basis_words: tuple = ()
    exact: bool = True

    def __str__(self):
        if self.value == INFINITY:
            return "inf"
        return str(int(self.value)) if self.exact else f">{int(self.value) - 1}"


def _search(w: Word, bound: int, budget_slack: int = 0) -> list[StallingsGraph]:
    """All minimal-rank folded graphs of rank <= ``bound`` in which the
    cyclically reduced word ``w`` is an imprimitive loop traversing every
    edge at least twice.

    The graph is grown along ``w`` one letter at a time: follow an existing
    edge if there is one, otherwise add an edge to a fresh vertex or to any
    existing vertex that keeps the graph folded.  At most
    ``|w|_g // 2`` edges carry label ``g``; an edge can only be added while the
    rank is below the bound, since the path must later close up.
    """
    r = rank_of(w)
    n = len(w)
    budgets = [0] + [occurrence_count(w, g) // 2 + budget_slack for g in range(1, r + 1)]
    eout = [[-1] * (r + 1)]
    ein = [[-1] * (r + 1)]
    edges: list[tuple] = []
    trav: list[int] = []
    labels = [0] * (r + 1)
    found: list[StallingsGraph] = []
    best = [bound]

    def add_edge(s, d, gen):
        eout[s][gen] = len(edges)
        ein[d][gen] = len(edges)
        edges.append((s, d, gen))
        trav.append(1)
        labels[gen] += 1

    def pop_edge():
        s, d, gen = edges.pop()
        trav.pop()
        eout[s][gen] = -1
        ein[d][gen] = -1
        labels[gen] -= 1

    def rec(i, cur):
        if i == n:
            if cur != 0 or min(trav) < 2:
                return
            rk = len(edges) - len(eout) + 1
            if rk > best[0]:
                return
            g = _canonical(len(eout), edges, 0)
            if not is_imprimitive_in(g, w):
                return
            if rk < best[0]:
                best[0] = rk
                found.clear()
            found.append(g)
            return
        x = w[i]
        gen = x if x > 0 else -x
        e = eout[cur][gen] if x > 0 else ein[cur][gen]
        if e >= 0:
            trav[e] += 1
            s, d, _ = edges[e]
            rec(i + 1, d if x > 0 else s)
            trav[e] -= 1
            return
        nv = len(eout)
        if len(edges) - nv + 1 >= best[0] or labels[gen] >= budgets[gen]:
            return
        eout.append([-1] * (r + 1))
        ein.append([-1] * (r + 1))
        add_edge(cur, nv, gen) if x > 0 else add_edge(nv, cur, gen)
        rec(i + 1, nv)
        pop_edge()
        eout.pop()
        ein.pop()
        for v in range(nv):
            if x > 0 and ein[v][gen] < 0:
                add_edge(cur, v, gen)
            elif x < 0 and eout[v][gen] < 0:
                add_edge(v, cur, gen)
            else:
                continue
            rec(i + 1, v)
            pop_edge()

    rec(0, 0)
    return sorted(set(found), key=lambda g: (g.num_vertices, g.edges))


def witness_pool(w: Sequence[int], bound: int, budget_slack: int = 0) -> list[StallingsGraph]:
    core = cyclic_core(w)
    if not core or bound < 1:
        return []
    return _search(core, bound, budget_slack)


def imprimitivity_rank(w: Sequence[int], cap: int | None = None,
                       witnesses: bool = True, budget_slack: int = 0) -> IrankReport:
    """Imprimitivity rank of ``w`` (computed on its cyclic reduction).

    ``cap`` defaults to the rank of the minimal free factor, which bounds the
    answer.  Values above ``cap`` are reported inexactly as ``cap + 1``.  With
    ``witnesses=False`` only the value is wanted, so the search stops one
    below the free-factor rank and graphs of that rank are never built.
    """
    core = cyclic_core(w)
    if not core:
        return IrankReport(0)
    if power_decompose(core).exponent > 1:
        pool = _search(core, 1, budget_slack) if witnesses else []
        return _report(core, 1, pool)
    if is_primitive(core):
        return IrankReport(INFINITY)
    upper = minimal_free_factor_rank(core)
    cap = upper if cap is None else cap
    if witnesses:
        pool = _search(core, min(cap, upper), budget_slack)
        if not pool:
            return IrankReport(cap + 1, exact=False)
        return _report(core, pool[0].rank, pool)
    bound = min(cap, upper - 1)
    pool = _search(core, bound, budget_slack) if bound >= 2 else []
    if pool:
        return IrankReport(pool[0].rank)
    if upper <= cap:
        return IrankReport(upper)
    return IrankReport(cap + 1, exact=False)


def _report(core: Word, value: int, pool: list) -> IrankReport:
    return IrankReport(value, tuple(pool), tuple(express_in_basis(g, core) for g in pool))


@dataclass(frozen=True)
class WSubgroup:
    graph: StallingsGraph


def w_subgroups(w: Sequence[int]) -> list[WSubgroup]:
    """Inclusion-maximal members of the minimal-rank witness pool."""
    report = imprimitivity_rank(w)
    if report.value in (0, INFINITY):
        raise PreconditionError("w-subgroups need finite, positive imprimitivity rank")
    pool = list(report.witnesses)
    maximal = []
    for h in pool:
        if any(k != h and is_subgroup(h, k) and not is_subgroup(k, h) for k in pool):
            continue
        if not any(is_subgroup(h, m.graph) and is_subgroup(m.graph, h) for m in maximal):
            maximal.append(WSubgroup(h))
    return maximal
