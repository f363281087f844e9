"""Certifying (non)hyperbolicity of one-relator groups ``F_r / <<w>>``.

Checks run in a fixed order and each either decides or falls through:

1. cyclically pinched splittings ``w ~ u v`` with disjoint supports;
2. the Ivanov-Schupp criteria for a generator occurring 2, 3 or 4 times;
3. the small cancellation conditions C(7), C(5)-T(4), C(4)-T(5), C(3)-T(7);
4. the C'(1/4)-T' condition of Blufstein and Minian;

and finally an optional external prover run as a subprocess.  Only the
first two can ever answer NonHyperbolic.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

from .stallings import PreconditionError
from .whitehead import is_primitive, is_whitehead_minimal, whitehead_graph
from .words import (
    Word,
    cyclic_word,
    format_word,
    free_reduce,
    inverse,
    is_cyclically_reduced,
    multiply,
    power_decompose,
    rank_of,
)

log = logging.getLogger(__name__)

INFINITY = math.inf


class Status(str, enum.Enum):
    HYPERBOLIC = "Hyperbolic"
    NONHYPERBOLIC = "NonHyperbolic"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


CHECKS = ("pinched", "ivanov_schupp", "small_cancellation", "blufstein_minian", "external")


class InvariantViolation(AssertionError):
    """Two certified answers contradict each other; always a bug."""


@dataclass(frozen=True)
class Verdict:
    status: Status
    decided_by: str = "none"
    certificate: dict | None = None
    note: str = ""

    @property
    def definitive(self) -> bool:
        return self.status is not Status.INCONCLUSIVE


INCONCLUSIVE = Verdict(Status.INCONCLUSIVE)


def _require(w: Sequence[int]) -> Word:
    w = tuple(w)
    if not w:
        raise PreconditionError("the trivial word")
    if not is_cyclically_reduced(w):
        raise PreconditionError(f"{format_word(w)} is not cyclically reduced")
    if power_decompose(w).exponent > 1:
        raise PreconditionError(f"{format_word(w)} is a proper power")
    return w


def _rotations(w: Word):
    for s in range(len(w)):
        yield w[s:] + w[:s]


def _is_proper_power(x: Word) -> bool:
    return bool(x) and power_decompose(x).exponent > 1


# -- (1) cyclically pinched -------------------------------------------------


def check_cyclically_pinched(w: Sequence[int]) -> Verdict:
    w = _require(w)
    split = None
    for rot in _rotations(w):
        for k in range(1, len(rot)):
            u, v = rot[:k], rot[k:]
            if {abs(x) for x in u} & {abs(x) for x in v}:
                continue
            if _is_proper_power(u) and _is_proper_power(v):
                return Verdict(Status.NONHYPERBOLIC, "pinched",
                               {"u": format_word(u), "v": format_word(v)})
            if split is None:
                split = (u, v)
    if split is None:
        return INCONCLUSIVE
    u, v = split
    return Verdict(Status.HYPERBOLIC, "pinched", {"u": format_word(u), "v": format_word(v)})


# -- (2) Ivanov-Schupp ------------------------------------------------------


@dataclass(frozen=True)
class ISDecomposition:
    letter: int
    form: str
    parts: tuple
    z: Word | None = None
    m: int | None = None
    n: int | None = None

    def as_dict(self) -> dict:
        d = {"letter": self.letter, "form": self.form,
             "parts": [format_word(p) for p in self.parts]}
        if self.z is not None:
            d.update(z=format_word(self.z), m=self.m, n=self.n)
        return d


def _common_root(x: Word, y: Word):
    """``(z, m, n)`` with ``x = z^m``, ``y = z^n`` and ``z`` not a proper power,
    or None if no such ``z`` exists.  Trivial words are exponent 0."""
    if not x and not y:
        return (), 0, 0
    if not x:
        z, n = power_decompose(y)
        return z, 0, n
    zx, m = power_decompose(x)
    if not y:
        return zx, m, 0
    zy, n = power_decompose(y)
    if zy == zx:
        return zx, m, n
    if zy == inverse(zx):
        return zx, m, -n
    return None


def _cyclic_root_class(x: Word) -> Word:
    root = power_decompose(x).root
    return min(cyclic_word(root), cyclic_word(inverse(root)))


def _oriented(w: Word, g: int) -> Word:
    """``w`` or its inverse, whichever has at least as many ``g`` as ``g^-1``."""
    pos = sum(1 for x in w if x == g)
    neg = sum(1 for x in w if x == -g)
    return w if pos >= neg else inverse(w)


def _split_at(w: Word, g: int) -> list[tuple[Word, list]]:
    """Rotations of ``w`` starting at an occurrence of ``g^{+-1}``, each with the
    signs of the occurrences and the subwords between them."""
    n = len(w)
    pos = [i for i in range(n) if abs(w[i]) == g]
    out = []
    for s in pos:
        rot = w[s:] + w[:s]
        idx = [i for i in range(n) if abs(rot[i]) == g]
        signs = [1 if rot[i] > 0 else -1 for i in idx]
        gaps = [rot[idx[k] + 1 : (idx[k + 1] if k + 1 < len(idx) else n)] for k in range(len(idx))]
        out.append((signs, gaps))
    return out


def _is_letter(w: Word, g: int):
    """Ivanov-Schupp verdict for the generator ``g``, or None to abstain."""
    count = sum(1 for x in w if abs(x) == g)
    if count == 1:
        signs, gaps = _split_at(_oriented(w, g), g)[0]
        return Status.HYPERBOLIC, ISDecomposition(g, "au", tuple(gaps))
    if count in (2, 3):
        return _theorem3(_oriented(w, g), g, count)
    if count == 4:
        return _theorem4(w, g)
    return None


def _theorem3(w: Word, g: int, count: int):
    hyperbolic = None
    for signs, gaps in _split_at(w, g):
        if signs[0] != 1:
            continue
        if count == 2:
            u, v = gaps
            if signs[1] == 1:
                dec = ISDecomposition(g, "auav", (u, v))
                if _is_proper_power(multiply(u, inverse(v))):
                    return Status.NONHYPERBOLIC, dec
            else:
                dec = ISDecomposition(g, "auAv", (u, v))
                if _cyclic_root_class(u) == _cyclic_root_class(v):
                    return Status.NONHYPERBOLIC, dec
                if _is_proper_power(u) and _is_proper_power(v):
                    return Status.NONHYPERBOLIC, dec
            hyperbolic = hyperbolic or dec
            continue
        t, u, v = gaps
        if signs == [1, 1, 1]:
            common = _common_root(multiply(u, inverse(t)), multiply(v, inverse(t)))
            dec = ISDecomposition(g, "atauav", (t, u, v))
            if common is not None:
                z, m, n = common
                dec = ISDecomposition(g, "atauav", (t, u, v), z, m, n)
                if _theorem3_case3(m, n):
                    return Status.NONHYPERBOLIC, dec
            hyperbolic = hyperbolic or dec
        elif signs == [1, 1, -1]:
            common = _common_root(multiply(inverse(t), u, t), v)
            dec = ISDecomposition(g, "atauAv", (t, u, v))
            if common is not None:
                z, m, n = common
                dec = ISDecomposition(g, "atauAv", (t, u, v), z, m, n)
                if abs(m) == abs(n) or m == -2 * n or n == -2 * m:
                    return Status.NONHYPERBOLIC, dec
            hyperbolic = hyperbolic or dec
    return Status.HYPERBOLIC, hyperbolic


def _theorem3_case3(m: int, n: int) -> bool:
    lo, hi = min(abs(m), abs(n)), max(abs(m), abs(n))
    if lo == 0:
        return hi > 1
    return (abs(m) == abs(n) and abs(m) != 1) or m == -n or m == 2 * n or n == 2 * m


def _theorem4(w: Word, g: int):
    signs = {1 if x > 0 else -1 for x in w if abs(x) == g}
    if len(signs) != 1:
        return None
    if signs == {-1}:
        w = inverse(w)
    _, gaps = _split_at(w, g)[0]
    if len(set(gaps)) != 4:
        return None
    dec = ISDecomposition(g, "four_positive", tuple(gaps))
    for i in range(4):
        u = [gaps[(i + k) % 4] for k in range(4)]
        if not multiply(u[0], inverse(u[1]), u[2], inverse(u[3])):
            return Status.NONHYPERBOLIC, dec
    return Status.HYPERBOLIC, dec


def ivanov_schupp_letters(w: Sequence[int]) -> dict:
    """Per-generator Ivanov-Schupp results for every generator that qualifies."""
    w = _require(w)
    results = {}
    for g in sorted({abs(x) for x in w}):
        res = _is_letter(w, g)
        if res is not None:
            results[g] = res
    return results


def check_ivanov_schupp(w: Sequence[int]) -> Verdict:
    results = ivanov_schupp_letters(w)
    if not results:
        return INCONCLUSIVE
    statuses = {status for status, _ in results.values()}
    if len(statuses) > 1:
        raise InvariantViolation(
            f"Ivanov-Schupp letters disagree on {format_word(w)}: "
            + ", ".join(f"{g}:{s}" for g, (s, _) in results.items()))
    g = min(results)
    status, dec = results[g]
    return Verdict(status, "ivanov_schupp", dec.as_dict())


# -- (3) small cancellation -------------------------------------------------


@dataclass(frozen=True)
class PieceAnalysis:
    pieces: frozenset
    max_piece_length: int
    min_factorization: float
    t_value: float
    girth: float = INFINITY


def symmetrized(w: Word) -> list[Word]:
    """Distinct rotations of ``w`` and of ``w^-1``."""
    inv = inverse(w)
    seen = {}
    for x in (w, inv):
        for rot in _rotations(x):
            seen.setdefault(rot, None)
    return list(seen)


def _lcp(a: Word, b: Word) -> int:
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return k


def t_value(w: Word) -> float:
    """Shortest closed walk of length >= 3 around an interior vertex.

    Triangles of the reduced Whitehead graph give 3.  Two parallel edges of
    the unreduced graph give a non-backtracking closed walk of length 4.
    Otherwise it is the girth of the reduced graph.
    """
    full = whitehead_graph(w)
    girth = whitehead_graph(w, reduced=True).girth()
    if girth > 3 and full.has_parallel_edges():
        return 4
    return girth


def compute_pieces(w: Sequence[int]) -> PieceAnalysis:
    w = tuple(w)
    if not w:
        raise PreconditionError("pieces of the trivial word")
    rels = symmetrized(w)
    # the longest common prefix with any other reading is attained by a
    # neighbour in sorted order
    ordered = sorted(rels)
    best = {r: 0 for r in rels}
    for a, b in zip(ordered, ordered[1:]):
        k = _lcp(a, b)
        best[a] = max(best[a], k)
        best[b] = max(best[b], k)
    pieces = frozenset(r[:k] for r in rels for k in range(1, best[r] + 1))
    n = len(w)
    min_fact = INFINITY
    for r in rels:
        rots = [r[i:] + r[:i] for i in range(n)]
        dp = [INFINITY] * (n + 1)
        dp[0] = 0
        for i in range(n):
            if dp[i] == INFINITY:
                continue
            reach = min(best.get(rots[i], 0), n - i)
            for step in range(1, reach + 1):
                if dp[i] + 1 < dp[i + step]:
                    dp[i + step] = dp[i] + 1
        min_fact = min(min_fact, dp[n])
    girth = whitehead_graph(w, reduced=True).girth()
    return PieceAnalysis(pieces, max(best.values()), min_fact, t_value(w), girth)


SMALL_CANCELLATION_PAIRS = ((7, 0), (5, 4), (4, 5), (3, 7))


def check_small_cancellation(w: Sequence[int]) -> Verdict:
    w = _require(w)
    pa = compute_pieces(w)
    for p, q in SMALL_CANCELLATION_PAIRS:
        if pa.min_factorization >= p and pa.t_value >= q:
            cond = f"C({p})" if q == 0 else f"C({p})-T({q})"
            return Verdict(Status.HYPERBOLIC, "small_cancellation",
                           {"condition": cond, "min_factorization": pa.min_factorization,
                            "t_value": pa.t_value})
    return INCONCLUSIVE


# -- (4) Blufstein-Minian ---------------------------------------------------


def degree_three_triples(w: Word):
    """Triples ``(r1, r2, r3)`` of the symmetrized set that can meet around an
    interior vertex of degree 3, with the longest arc each pair can share.

    The boundary of ``r_i`` leaves the vertex along the arc it shares with
    ``r_{i+1}^-1``, so consecutive faces need ``first(r_i) = last(r_{i+1})^-1``.
    """
    rels = symmetrized(w)
    by_last = {}
    for r in rels:
        by_last.setdefault(r[-1], []).append(r)
    for r1 in rels:
        for r2 in by_last.get(-r1[0], ()):
            if r2 == inverse(r1):
                continue
            for r3 in by_last.get(-r2[0], ()):
                if r3 == inverse(r2) or r3[0] != -r1[-1] or r1 == inverse(r3):
                    continue
                arcs = (_lcp(r1, inverse(r2)), _lcp(r2, inverse(r3)), _lcp(r3, inverse(r1)))
                yield (r1, r2, r3), arcs


def check_blufstein_minian(w: Sequence[int]) -> Verdict:
    w = _require(w)
    n = len(w)
    pa = compute_pieces(w)
    if 4 * pa.max_piece_length >= n:
        return INCONCLUSIVE
    worst = 0
    for _, arcs in degree_three_triples(w):
        worst = max(worst, sum(arcs))
        if 2 * worst >= n:
            return INCONCLUSIVE
    return Verdict(Status.HYPERBOLIC, "blufstein_minian",
                   {"max_piece_length": pa.max_piece_length, "max_triple_sum": worst})


# -- external prover --------------------------------------------------------


@dataclass(frozen=True)
class ProverConfig:
    command: str
    timeout: float = 60.0
    retries: int = 0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("prover timeout must be positive")
        if "{file}" not in self.command:
            raise ValueError("prover command needs a {file} placeholder")


PROVER_TOKENS = ("HYPERBOLIC", "NONHYPERBOLIC", "INCONCLUSIVE", "TIMEOUT")


def write_presentation(path: str, w: Sequence[int], rank: int) -> None:
    with open(path, "w") as fh:
        fh.write(f"rank {rank}\n{format_word(w)}\n")


def run_prover(w: Sequence[int], rank: int, config: ProverConfig) -> Verdict:
    """Ask the external prover; it can only ever certify hyperbolicity."""
    with tempfile.TemporaryDirectory(prefix="freecensus-") as tmp:
        path = os.path.join(tmp, "presentation.txt")
        write_presentation(path, w, rank)
        argv = shlex.split(config.command.format(file=shlex.quote(path)))
        note = ""
        for attempt in range(config.retries + 1):
            try:
                proc = subprocess.run(argv, capture_output=True, text=True,
                                      timeout=config.timeout)
            except subprocess.TimeoutExpired:
                note = "TIMEOUT"
                continue
            except OSError as exc:
                note = f"prover failed to start: {exc}"
                log.warning("%s on %s", note, format_word(w))
                break
            tokens = proc.stdout.split()
            token = tokens[0].upper() if tokens else ""
            if token == "HYPERBOLIC":
                return Verdict(Status.HYPERBOLIC, "external", {"token": token})
            if token == "NONHYPERBOLIC":
                return Verdict(Status.INCONCLUSIVE, "none", None,
                               "external prover answered NONHYPERBOLIC; not certified")
            if token in ("INCONCLUSIVE", "TIMEOUT"):
                note = token
                continue
            note = f"unrecognised prover output {proc.stdout[:40]!r} (exit {proc.returncode})"
            log.warning("%s on %s", note, format_word(w))
        return Verdict(Status.INCONCLUSIVE, "none", None, note)


# -- cascade ------------------------------------------------------------------


NATIVE_CHECKS = (
    check_cyclically_pinched,
    check_ivanov_schupp,
    check_small_cancellation,
    check_blufstein_minian,
)


def native_cascade(w: Sequence[int]) -> Verdict:
    for check in NATIVE_CHECKS:
        verdict = check(w)
        if verdict.definitive:
            return verdict
    return INCONCLUSIVE


def cascade(w: Sequence[int], prover: ProverConfig | None = None, rank: int | None = None) -> Verdict:
    """Run checks (1)-(4) in order, then the external prover if configured.

    ``w`` must be Whitehead minimal, imprimitive and not a proper power.
    """
    w = _require(w)
    r = rank if rank is not None else rank_of(w)
    if not is_whitehead_minimal(w, r):
        raise PreconditionError(f"{format_word(w)} is not Whitehead minimal")
    if is_primitive(w):
        raise PreconditionError(f"{format_word(w)} is primitive")
    verdict = native_cascade(w)
    if verdict.definitive or prover is None:
        return verdict
    return run_prover(w, r, prover)
