"""Command line interface: ``freecensus <subcommand> ...``.

Exit status is 0 on success, 1 when a table verification finds a mismatch
and 2 for usage errors or invalid input.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from collections import Counter

from . import __version__
from .census import (
    HEADER,
    STRATEGIES,
    CensusSummary,
    apply_prover,
    emit_histogram,
    read_records,
    run_census,
    run_sharded,
    verify_tables,
)
from .enumeration import ShardSpec, enumerate_candidates, enumerate_orbit_reps, explore_component
from .hyperbolicity import NATIVE_CHECKS, ProverConfig, cascade, compute_pieces
from .stallings import imprimitivity_rank
from .whitehead import is_primitive, minimal_free_factor_rank, whitehead_minimize
from .words import (
    InvalidInput,
    MAX_RANK,
    cyclic_reduce,
    format_word,
    parse_word,
    rank_of,
)

log = logging.getLogger("freecensus")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--rank", type=int, help=f"rank of the free group (1..{MAX_RANK})")
    p.add_argument("--length", type=int, help="word length")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--format", choices=("tsv", "csv"), default="tsv")
    p.add_argument("--prover-cmd", help='external prover command, e.g. "prover --in {file}"')
    p.add_argument("--prover-timeout", type=float, default=60.0, help="seconds per prover call")
    p.add_argument("--prover-retries", type=int, default=0)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="freecensus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common], help="free and cyclic reduction of a word")
    p.add_argument("word")

    p = sub.add_parser("minimize", parents=[common], help="Whitehead minimisation")
    p.add_argument("word")

    p = sub.add_parser("irank", parents=[common], help="imprimitivity rank with witness graphs")
    p.add_argument("word")
    p.add_argument("--no-witnesses", action="store_true")

    p = sub.add_parser("check", parents=[common], help="run every hyperbolicity check on a word")
    p.add_argument("word")

    p = sub.add_parser("component", parents=[common], help="SLPCI+- component of a word")
    p.add_argument("word")

    p = sub.add_parser("enumerate", parents=[common], help="list orbit representatives")
    p.add_argument("--candidates", action="store_true",
                   help="list every Whitehead-minimal SLPCI+- minimal word instead")
    p.add_argument("--all-supports", action="store_true")

    p = sub.add_parser("census", parents=[common], help="classify every orbit of one length")
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--shard-index", type=int, default=0)
    p.add_argument("--prefix-depth", type=int)
    p.add_argument("--all-shards", action="store_true",
                   help="run every shard and merge (sorted output)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for --all-shards")
    p.add_argument("--strategy", choices=STRATEGIES, default="canonical")
    p.add_argument("--mode", choices=("full", "counts-only"), default="full")
    p.add_argument("--checkpoint-file")
    p.add_argument("--checkpoint-every", type=int, default=10**6)
    p.add_argument("--prover-jobs", type=int, default=1, help="parallel prover calls")

    p = sub.add_parser("verify-tables", parents=[common], help="recompute a table file and diff it")
    p.add_argument("table", help="CSV path or bundled name (table1_desk.csv, table2_f2.csv)")
    p.add_argument("--jobs", type=int, default=1)

    sub.add_parser("histogram", parents=[common], help="component-size histogram as CSV")
    return parser


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise InvalidInput(f"--{name} is required")


def _word(args):
    w = parse_word(args.word, args.rank)
    rank = args.rank if args.rank is not None else max(rank_of(w), 1)
    return w, rank


def _prover(args) -> ProverConfig | None:
    if not args.prover_cmd:
        return None
    return ProverConfig(args.prover_cmd, args.prover_timeout, args.prover_retries)


def cmd_reduce(args, out):
    w, _ = _word(args)
    core, conj = cyclic_reduce(w)
    print(f"reduced\t{format_word(w)}", file=out)
    print(f"cyclic_core\t{format_word(core)}", file=out)
    print(f"conjugator\t{format_word(conj)}", file=out)


def cmd_minimize(args, out):
    w, rank = _word(args)
    m, chain = whitehead_minimize(w, rank)
    print(f"minimal\t{format_word(m)}", file=out)
    print(f"length\t{len(m)}", file=out)
    print(f"chain\t{chain or '-'}", file=out)
    print(f"primitive\t{is_primitive(w)}", file=out)
    print(f"free_factor_rank\t{minimal_free_factor_rank(w) if w else 0}", file=out)


def cmd_irank(args, out):
    w, _ = _word(args)
    report = imprimitivity_rank(w, witnesses=not args.no_witnesses)
    print(report, file=out)
    for k, (g, expr) in enumerate(zip(report.witnesses, report.witness_basis_words)):
        basis = " ".join(format_word(b) for b in g.basis_words())
        print(f"# witness {k}: basis {basis}; w = {format_word(expr)} in that basis", file=out)
        print(g.to_text(), file=out)


def cmd_check(args, out):
    w, rank = _word(args)
    for check in NATIVE_CHECKS:
        v = check(w)
        print(f"{check.__name__[6:]}\t{v.status}\t{v.certificate or ''}", file=out)
    pa = compute_pieces(w)
    print(f"pieces\tmax={pa.max_piece_length} factorization={pa.min_factorization} "
          f"t={pa.t_value}", file=out)
    try:
        v = cascade(w, _prover(args), rank)
        print(f"cascade\t{v.status}\t{v.decided_by}", file=out)
    except InvalidInput as exc:
        print(f"cascade\tnot applicable: {exc}", file=out)


def cmd_component(args, out):
    w, rank = _word(args)
    is_min, comp = explore_component(w, rank, early_exit=False)
    print(f"# size {comp.size}, minimum {format_word(comp.minimum)}", file=out)
    for m in sorted(comp.members):
        print(format_word(m), file=out)


def cmd_enumerate(args, out):
    _need(args, "rank", "length")
    if args.candidates:
        words = enumerate_candidates(args.rank, args.length)
    else:
        words = enumerate_orbit_reps(args.rank, args.length, not args.all_supports)
    n = 0
    for w in words:
        print(format_word(w), file=out)
        n += 1
    log.info("%d words", n)


def cmd_census(args, out):
    _need(args, "rank", "length")
    sep = "\t" if args.format == "tsv" else ","
    prover = _prover(args)
    deferred = prover is not None and args.prover_jobs > 1
    depth = args.prefix_depth or min(args.length, 6)
    if args.all_shards:
        summary, lines = run_sharded(args.rank, args.length, args.shards, args.jobs,
                                     args.strategy, None if deferred else prover, depth)
        records = read_records(lines)
    else:
        shard = ShardSpec(args.shards, args.shard_index, depth)
        if args.checkpoint_file:
            if not args.output:
                raise InvalidInput("--checkpoint-file needs --output")
            mode = "r+" if os.path.exists(args.output) else "w"
            with open(args.output, mode) as fh:
                summary = run_census(args.rank, args.length, shard, args.mode, prover,
                                     args.strategy, fh, sep, args.checkpoint_file,
                                     args.checkpoint_every)
            _print_summary(summary)
            return 0
        buf = io.StringIO()
        summary = run_census(args.rank, args.length, shard, args.mode,
                             None if deferred else prover, args.strategy, buf)
        records = read_records(buf.getvalue().splitlines())
    if deferred:
        records = apply_prover(records, prover, args.prover_jobs)
        summary.tallies = Counter((r.irank, r.verdict) for r in records)
    if args.mode == "full":
        print(HEADER.replace("\t", sep), file=out)
        for rec in records:
            print(rec.to_line(sep), file=out)
    else:
        print(sep.join(("irank", "verdict", "count")), file=out)
        for (irank, verdict), n in sorted(summary.tallies.items()):
            print(sep.join((irank, verdict, str(n))), file=out)
    _print_summary(summary)
    return 0


def _print_summary(summary: CensusSummary):
    log.info("rank %d length %d: %d orbits from %d candidates in %.1fs",
             summary.rank, summary.length, summary.records, summary.candidates, summary.elapsed)
    for (irank, verdict), n in sorted(summary.tallies.items()):
        log.info("  irank %s %s: %d", irank, verdict, n)


def cmd_verify_tables(args, out):
    def each(length, col, expected, actual):
        mark = "ok" if expected == actual else "MISMATCH"
        print(f"L={length}\t{col}\texpected={expected}\tactual={actual}\t{mark}", file=out)
        out.flush()

    report = verify_tables(args.table, jobs=args.jobs, log_each=each)
    if report.ok:
        print(f"PASS: {report.cells} cells match", file=out)
        return 0
    print(f"FAIL: {len(report.mismatches)} of {report.cells} cells differ; first: {report.mismatches[0]}",
          file=out)
    return 1


def cmd_histogram(args, out):
    _need(args, "rank", "length")
    emit_histogram(args.rank, args.length, out)


COMMANDS = {
    "reduce": cmd_reduce,
    "minimize": cmd_minimize,
    "irank": cmd_irank,
    "check": cmd_check,
    "component": cmd_component,
    "enumerate": cmd_enumerate,
    "census": cmd_census,
    "verify-tables": cmd_verify_tables,
    "histogram": cmd_histogram,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    to_file = args.output and not (args.command == "census" and getattr(args, "checkpoint_file", None))
    try:
        if to_file:
            with open(args.output, "w", newline="") as out:
                code = COMMANDS[args.command](args, out)
        else:
            code = COMMANDS[args.command](args, sys.stdout)
    except InvalidInput as exc:
        print(f"freecensus: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"freecensus: error: {exc}", file=sys.stderr)
        return 2
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
