"""The census pipeline: enumerate orbit representatives, classify, tally.

Records are tab-separated lines in the field order of :class:`CensusRecord`
with a ``#`` header.  A run can be split into shards (ownership by the
ordinal of a fixed-length prefix) and checkpointed; resuming truncates the
output to the last checkpoint and restarts the odometer after the last
candidate it had finished.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Sequence, TextIO

from .enumeration import (
    ShardSpec,
    enumerate_candidates,
    explore_component,
    largest_component_formula,
)
from .hyperbolicity import (
    ProverConfig,
    Status,
    Verdict,
    native_cascade,
    run_prover,
)
from .stallings import INFINITY, imprimitivity_rank
from .whitehead import is_primitive
from .words import InvalidInput, check_rank, format_word, parse_word, power_decompose

log = logging.getLogger(__name__)

FIELDS = ("rank", "length", "representative", "irank", "component_size", "verdict", "decided_by")
HEADER = "#" + "\t".join(FIELDS)
STRATEGIES = ("canonical", "reordered")
MODES = ("full", "counts-only")


def irank_str(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    return "inf" if value == INFINITY else str(int(value))


@dataclass(frozen=True)
class CensusRecord:
    rank: int
    length: int
    representative: str
    irank: str
    component_size: int | None
    verdict: str
    decided_by: str

    def fields(self) -> list[str]:
        size = "-" if self.component_size is None else str(self.component_size)
        return [str(self.rank), str(self.length), self.representative, self.irank,
                size, self.verdict, self.decided_by]

    def to_line(self, sep: str = "\t") -> str:
        return sep.join(self.fields())

    @classmethod
    def from_line(cls, line: str, sep: str = "\t") -> "CensusRecord":
        parts = line.rstrip("\n").split(sep)
        if len(parts) != len(FIELDS):
            raise InvalidInput(f"malformed census record: {line!r}")
        rank, length, rep, irank, size, verdict, by = parts
        return cls(int(rank), int(length), rep, irank,
                   None if size == "-" else int(size), verdict, by)


def read_records(lines: Iterable[str], sep: str = "\t") -> list[CensusRecord]:
    return [CensusRecord.from_line(line, sep) for line in lines
            if line.strip() and not line.startswith("#")]


@dataclass
class CensusSummary:
    rank: int
    length: int
    records: int = 0
    candidates: int = 0
    tallies: Counter = field(default_factory=Counter)
    elapsed: float = 0.0

    def irank_tallies(self) -> Counter:
        out: Counter = Counter()
        for (irank, _), n in self.tallies.items():
            out[irank] += n
        return out

    def verdict_tallies(self) -> Counter:
        out: Counter = Counter()
        for (_, verdict), n in self.tallies.items():
            out[verdict] += n
        return out

    def merge(self, other: "CensusSummary") -> None:
        self.records += other.records
        self.candidates += other.candidates
        self.tallies.update(other.tallies)
        self.elapsed += other.elapsed


def classify(w: Sequence[int], rank: int, prover: ProverConfig | None = None,
             irank=None) -> Verdict:
    """Verdict for a Whitehead-minimal word, covering the degenerate cases the
    cascade excludes: proper powers (torsion, hyperbolic) and primitives
    (free quotient)."""
    w = tuple(w)
    if power_decompose(w).exponent > 1:
        return Verdict(Status.HYPERBOLIC, "proper_power", {"root": format_word(power_decompose(w).root)})
    if irank == INFINITY or (irank is None and is_primitive(w)):
        return Verdict(Status.HYPERBOLIC, "primitive", {})
    verdict = native_cascade(w)
    if not verdict.definitive and prover is not None:
        verdict = run_prover(w, rank, prover)
        if verdict.note:
            log.info("prover on %s: %s", format_word(w), verdict.note)
    return verdict


def _record(rank, length, w, irank, size, verdict) -> CensusRecord:
    return CensusRecord(rank, length, format_word(w), irank_str(irank), size,
                        str(verdict.status), verdict.decided_by)


def iter_census(rank: int, length: int, shard: ShardSpec | None = None,
                strategy: str = "canonical", prover: ProverConfig | None = None,
                start_after: Sequence[int] | None = None,
                progress=None) -> Iterator[CensusRecord]:
    """Yield one record per orbit whose representative lies in the shard.

    ``progress(candidate)`` is called after every candidate is finished, which
    is what checkpointing hooks into.

    The canonical strategy checks orbit minimality first and then computes
    the exact imprimitivity rank and the verdict.  The reordered strategy runs
    the hyperbolicity checks first, asks whether irank is 2 only for words
    they did not certify hyperbolic (irank is ``-`` otherwise) and checks
    orbit minimality last.
    """
    check_rank(rank)
    if strategy not in STRATEGIES:
        raise InvalidInput(f"unknown strategy {strategy!r}")
    for w in enumerate_candidates(rank, length, shard, start_after):
        rec = None
        if len({abs(x) for x in w}) == rank:
            if strategy == "canonical":
                rec = _canonical(rank, length, w, prover)
            else:
                rec = _reordered(rank, length, w, prover)
        if rec is not None:
            yield rec
        if progress is not None:
            progress(w)


def _canonical(rank, length, w, prover):
    is_min, comp = explore_component(w, rank)
    if not is_min:
        return None
    irank = imprimitivity_rank(w, witnesses=False).value
    verdict = classify(w, rank, prover, irank)
    return _record(rank, length, w, irank, comp.size, verdict)


def _reordered(rank, length, w, prover):
    verdict = classify(w, rank, prover)
    irank = None
    if verdict.status is not Status.HYPERBOLIC:
        rep = imprimitivity_rank(w, cap=2, witnesses=False)
        irank = rep.value if rep.exact else ">2"
    is_min, comp = explore_component(w, rank)
    if not is_min:
        return None
    return _record(rank, length, w, irank, comp.size, verdict)


# -- checkpointing ------------------------------------------------------------


@dataclass
class Checkpoint:
    rank: int
    length: int
    shard: list
    strategy: str
    last_candidate: str | None = None
    records: int = 0
    candidates: int = 0
    output_offset: int = 0
    tallies: list = field(default_factory=list)
    done: bool = False

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(asdict(self), fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        with open(path) as fh:
            return cls(**json.load(fh))


def run_census(rank: int, length: int, shard: ShardSpec | None = None, mode: str = "full",
               prover: ProverConfig | None = None, strategy: str = "canonical",
               out: TextIO | None = None, sep: str = "\t",
               checkpoint_path: str | None = None, checkpoint_every: int = 10**6,
               stop_after: int | None = None) -> CensusSummary:
    """Run one shard and write its records to ``out`` (full mode only).

    With ``checkpoint_path`` an existing checkpoint for the same job is
    resumed: ``out`` must then be a seekable file opened for ``r+`` or ``a``
    and is truncated to the checkpointed offset.  ``stop_after`` ends the
    run after that many candidates (used to simulate an interrupted run).
    """
    if mode not in MODES:
        raise InvalidInput(f"unknown mode {mode!r}")
    shard = shard or ShardSpec()
    summary = CensusSummary(rank, length)
    start_after = None
    shard_key = [shard.total_shards, shard.shard_index, shard.prefix_depth]
    ckpt = Checkpoint(rank, length, shard_key, strategy)
    if checkpoint_path and os.path.exists(checkpoint_path):
        old = Checkpoint.load(checkpoint_path)
        if (old.rank, old.length, old.shard, old.strategy) != (rank, length, shard_key, strategy):
            raise InvalidInput(f"checkpoint {checkpoint_path} belongs to a different job")
        ckpt = old
        summary.records, summary.candidates = old.records, old.candidates
        summary.tallies = Counter({(a, b): n for a, b, n in old.tallies})
        if old.done:
            return summary
        if old.last_candidate is not None:
            start_after = parse_word(old.last_candidate)
        if out is not None and mode == "full":
            out.seek(old.output_offset)
            out.truncate()
    elif out is not None and mode == "full":
        out.write(HEADER.replace("\t", sep) + "\n")

    t0 = time.time()
    pending = {"last": None}

    def progress(w):
        pending["last"] = w
        summary.candidates += 1
        if checkpoint_path and summary.candidates % checkpoint_every == 0:
            _save(done=False)
        if stop_after is not None and summary.candidates >= stop_after:
            raise _Stop

    def _save(done):
        if out is not None:
            out.flush()
            ckpt.output_offset = out.tell()
        if pending["last"] is not None:
            ckpt.last_candidate = format_word(pending["last"])
        ckpt.records, ckpt.candidates = summary.records, summary.candidates
        ckpt.tallies = [[a, b, n] for (a, b), n in sorted(summary.tallies.items())]
        ckpt.done = done
        ckpt.save(checkpoint_path)

    records = iter_census(rank, length, shard, strategy, prover, start_after, progress)
    try:
        for rec in records:
            summary.records += 1
            summary.tallies[(rec.irank, rec.verdict)] += 1
            if out is not None and mode == "full":
                out.write(rec.to_line(sep) + "\n")
    except _Stop:
        summary.elapsed = time.time() - t0
        if checkpoint_path:
            _save(done=False)
        return summary
    summary.elapsed = time.time() - t0
    if checkpoint_path:
        _save(done=True)
    return summary


class _Stop(Exception):
    pass


def _census_worker(args) -> tuple[CensusSummary, list[str]]:
    rank, length, shard, strategy, prover = args
    buf = io.StringIO()
    summary = run_census(rank, length, shard, "full", prover, strategy, out=buf)
    lines = [line for line in buf.getvalue().splitlines() if not line.startswith("#")]
    return summary, lines


def run_sharded(rank: int, length: int, shards: int, jobs: int = 1, strategy: str = "canonical",
                prover: ProverConfig | None = None, prefix_depth: int | None = None) -> tuple[CensusSummary, list[str]]:
    """Run every shard (in ``jobs`` worker processes) and merge the results.

    Record lines come back sorted, so the merged output is independent of
    the number of shards.
    """
    depth = prefix_depth or min(length, 6)
    tasks = [(rank, length, ShardSpec(shards, i, depth), strategy, prover) for i in range(shards)]
    if jobs > 1 and shards > 1:
        import multiprocessing

        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            results = pool.map(_census_worker, tasks)
    else:
        results = [_census_worker(t) for t in tasks]
    total = CensusSummary(rank, length)
    lines: list[str] = []
    for summary, part in results:
        total.merge(summary)
        lines.extend(part)
    lines.sort()
    return total, lines


# -- tables -------------------------------------------------------------------


def load_table(source) -> tuple[list[str], dict]:
    """Read a table CSV: first column ``L``, integer cells.

    ``source`` is a path, a bundled file name, or an open text stream.
    Returns the column names and ``{L: {column: value}}``.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    else:
        text = resources.files("freecensus").joinpath("data", source).read_text()
    reader = csv.reader(line for line in text.splitlines() if line.strip())
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInput("empty table file") from None
    if not header or header[0].strip() != "L":
        raise InvalidInput("table header must start with L")
    cols = [c.strip() for c in header[1:]]
    rows = {}
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise InvalidInput(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            rows[int(row[0])] = {c: int(v.replace("_", "")) for c, v in zip(cols, row[1:])}
        except ValueError as exc:
            raise InvalidInput(f"line {lineno}: {exc}") from None
    for c in cols:
        _parse_column(c)
    return cols, rows


def _parse_column(col: str) -> tuple[int, int | None]:
    """``F3`` is rank 3, all orbits; ``F2:1`` is rank 2, irank 1."""
    if not col.startswith("F"):
        raise InvalidInput(f"bad table column {col!r}")
    rank, _, irank = col[1:].partition(":")
    try:
        return int(rank), (int(irank) if irank else None)
    except ValueError:
        raise InvalidInput(f"bad table column {col!r}") from None


@dataclass
class TableMismatch:
    length: int
    column: str
    expected: int
    actual: int
    example: str | None = None

    def __str__(self):
        s = f"L={self.length} {self.column}: expected {self.expected}, got {self.actual}"
        return s + (f" (e.g. {self.example})" if self.example else "")


@dataclass
class TableReport:
    cells: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_tables(source, jobs: int = 1, log_each=None) -> TableReport:
    """Recompute every cell of a table file and diff against it."""
    cols, rows = load_table(source)
    parsed = {c: _parse_column(c) for c in cols}
    need_irank = {rank for rank, irank in parsed.values() if irank is not None}
    report = TableReport()
    for length in sorted(rows):
        cache: dict = {}
        for col in cols:
            rank, irank = parsed[col]
            expected = rows[length][col]
            if rank not in cache:
                cache[rank] = _table_census(rank, length, rank in need_irank, jobs)
            tallies, example = cache[rank]
            if irank is None:
                actual = sum(tallies.values())
            else:
                actual = tallies.get(str(irank), 0)
            report.cells += 1
            if actual != expected:
                report.mismatches.append(TableMismatch(length, col, expected, actual, example))
            if log_each is not None:
                log_each(length, col, expected, actual)
    return report


def _table_census(rank: int, length: int, need_irank: bool, jobs: int = 1):
    """Orbit counts per irank (``?`` when irank was not needed) plus the
    first representative found, for mismatch reports."""
    shards = max(1, jobs)
    depth = min(length, 6)
    tasks = [(rank, length, ShardSpec(shards, i, depth), need_irank) for i in range(shards)]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            parts = pool.map(_table_worker, tasks)
    else:
        parts = [_table_worker(t) for t in tasks]
    tallies: Counter = Counter()
    examples = []
    for t, ex in parts:
        tallies.update(t)
        if ex:
            examples.append(ex)
    return tallies, (min(examples) if examples else None)


def _table_worker(args):
    rank, length, shard, need_irank = args
    tallies: Counter = Counter()
    example = None
    for w in enumerate_candidates(rank, length, shard):
        if len({abs(x) for x in w}) != rank:
            continue
        is_min, _ = explore_component(w, rank)
        if not is_min:
            continue
        example = example or format_word(w)
        if need_irank:
            tallies[irank_str(imprimitivity_rank(w, witnesses=False).value)] += 1
        else:
            tallies["?"] += 1
    return tallies, example


# -- histogram ----------------------------------------------------------------


def component_histogram(rank: int, length: int, shard: ShardSpec | None = None) -> Counter:
    """Sizes of all SLPCI+- components among Whitehead-minimal words (every
    support, not only full support)."""
    hist: Counter = Counter()
    for w in enumerate_candidates(rank, length, shard):
        is_min, comp = explore_component(w, rank)
        if is_min:
            hist[comp.size] += 1
    return hist


def emit_histogram(rank: int, length: int, out: TextIO | None = None) -> Counter:
    """Write ``component_size,count,formula_match`` rows; ``formula_match``
    flags the row whose size is the predicted largest rank-3 component."""
    hist = component_histogram(rank, length)
    predicted = largest_component_formula(length) if rank == 3 else None
    if out is not None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["component_size", "count", "formula_match"])
        for size in sorted(hist):
            writer.writerow([size, hist[size], int(size == predicted)])
    return hist


# -- deferred prover pass ---------------------------------------------------


def apply_prover(records: list[CensusRecord], config: ProverConfig, jobs: int = 1) -> list[CensusRecord]:
    """Re-examine Inconclusive records with the external prover, ``jobs`` at a
    time.  Each call owns its own temporary directory, so threads suffice."""
    from concurrent.futures import ThreadPoolExecutor

    todo = [i for i, rec in enumerate(records) if rec.verdict == str(Status.INCONCLUSIVE)]

    def work(i):
        rec = records[i]
        return i, run_prover(parse_word(rec.representative), rec.rank, config)

    out = list(records)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for i, verdict in pool.map(work, todo):
            if verdict.definitive:
                rec = out[i]
                out[i] = CensusRecord(rec.rank, rec.length, rec.representative, rec.irank,
                                      rec.component_size, str(verdict.status), verdict.decided_by)
    return out
