import io
import os
from collections import Counter

import pytest

from freecensus import cli
from freecensus.census import (
    HEADER,
    CensusRecord,
    emit_histogram,
    load_table,
    read_records,
    run_census,
    run_sharded,
    verify_tables,
)
from freecensus.enumeration import ShardSpec
from freecensus.stallings import imprimitivity_rank
from freecensus.words import InvalidInput, parse_word


def census_lines(rank, length, **kw):
    buf = io.StringIO()
    summary = run_census(rank, length, out=buf, **kw)
    lines = buf.getvalue().splitlines()
    return summary, lines


def test_record_round_trip():
    rec = CensusRecord(2, 8, "BBAbaabA", "2", 2, "Inconclusive", "none")
    assert CensusRecord.from_line(rec.to_line()) == rec
    assert CensusRecord.from_line(rec.to_line(","), ",") == rec
    with pytest.raises(InvalidInput):
        CensusRecord.from_line("1\t2")


def test_census_counts():
    summary, lines = census_lines(2, 8)
    assert lines[0] == HEADER
    assert summary.records == 34 == len(lines) - 1
    assert run_census(3, 9, mode="counts-only").records == 98


def test_records_are_consistent():
    _, lines = census_lines(2, 9)
    for rec in read_records(lines):
        x = parse_word(rec.representative)
        assert rec.irank == str(imprimitivity_rank(x, witnesses=False).value)
        assert rec.component_size >= 1
        assert (rec.verdict == "Inconclusive") == (rec.decided_by == "none")


def test_counts_only_matches_full():
    full, lines = census_lines(2, 10)
    counts = run_census(2, 10, mode="counts-only")
    assert counts.tallies == full.tallies
    assert counts.tallies == Counter((r.irank, r.verdict) for r in read_records(lines))


@pytest.mark.parametrize("shards", [3, 7])
def test_shard_merge_is_deterministic(shards):
    _, single = census_lines(2, 10)
    merged = []
    for i in range(shards):
        _, lines = census_lines(2, 10, shard=ShardSpec(shards, i, 6))
        merged.extend(line for line in lines if not line.startswith("#"))
    assert sorted(merged) == sorted(single[1:])
    summary, lines = run_sharded(2, 10, shards)
    assert lines == sorted(single[1:])


def test_reordered_strategy_same_verdicts():
    for length in range(4, 11):
        a, _ = census_lines(2, length)
        b, _ = census_lines(2, length, strategy="reordered")
        assert a.verdict_tallies() == b.verdict_tallies()
        assert a.records == b.records


def test_checkpoint_resume(tmp_path):
    _, expected = census_lines(2, 10)
    out = tmp_path / "out.tsv"
    ckpt = tmp_path / "run.json"
    with open(out, "w") as fh:
        first = run_census(2, 10, out=fh, checkpoint_path=str(ckpt), checkpoint_every=50,
                           stop_after=137)
    assert first.candidates == 137
    # simulate a crash after the checkpoint: junk past the saved offset
    with open(out, "a") as fh:
        fh.write("garbage line\n")
    with open(out, "r+") as fh:
        second = run_census(2, 10, out=fh, checkpoint_path=str(ckpt), checkpoint_every=50)
    assert out.read_text().splitlines() == expected
    assert second.records == len(expected) - 1
    with open(out, "r+") as fh:
        again = run_census(2, 10, out=fh, checkpoint_path=str(ckpt))
    assert again.records == second.records


def test_checkpoint_rejects_other_job(tmp_path):
    ckpt = tmp_path / "run.json"
    run_census(2, 6, checkpoint_path=str(ckpt))
    with pytest.raises(InvalidInput):
        run_census(2, 7, checkpoint_path=str(ckpt))


def test_histogram():
    buf = io.StringIO()
    assert emit_histogram(1, 5, buf) == Counter({1: 1})
    assert buf.getvalue().splitlines() == ["component_size,count,formula_match", "1,1,0"]


def test_table_files():
    cols, rows = load_table("table1_desk.csv")
    assert cols == ["F1", "F2", "F3", "F4"] and rows[12]["F4"] == 7106
    cols, rows = load_table("table2_f2.csv")
    assert rows[16] == {"F2:1": 34, "F2:2": 95406}


def test_verify_tables_small_slice():
    table = io.StringIO("L,F1,F2,F3\n6,1,8,1\n7,1,12,5\n")
    assert verify_tables(table).ok


def test_verify_tables_reports_mismatch():
    report = verify_tables(io.StringIO("L,F2,F2:1,F2:2\n8,34,2,32\n9,70,0,71\n"))
    assert not report.ok
    (bad,) = report.mismatches
    assert (bad.length, bad.column, bad.expected, bad.actual) == (9, "F2", 70, 71)
    assert bad.example


@pytest.mark.parametrize("text", ["", "X,F2\n1,0\n", "L,F2\n4\n", "L,G2\n4,2\n", "L,F2\n4,two\n"])
def test_verify_tables_malformed(text):
    with pytest.raises(InvalidInput):
        verify_tables(io.StringIO(text))


# -- CLI ----------------------------------------------------------------------

def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_basic_commands(capsys):
    code, out, _ = run_cli(capsys, "reduce", "abBAc")
    assert code == 0 and "reduced\tc" in out
    code, out, _ = run_cli(capsys, "minimize", "abab")
    assert "minimal\taa" in out
    code, out, _ = run_cli(capsys, "irank", "abAB")
    assert out.splitlines()[0] == "2"
    code, out, _ = run_cli(capsys, "check", "aabb")
    assert "cascade\tNonHyperbolic\tpinched" in out
    code, out, _ = run_cli(capsys, "component", "BBABBAAbA", "--rank", "2")
    assert "# size 3, minimum BBBABBAAA" in out
    code, out, _ = run_cli(capsys, "enumerate", "--rank", "2", "--length", "5")
    assert out.split() == ["BBBAA", "BBABa", "BBAba"]


def test_cli_census_and_formats(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "census", "--rank", "2", "--length", "8", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("#rank,length") and len(lines) == 35
    code, out, _ = run_cli(capsys, "census", "--rank", "2", "--length", "8", "--mode", "counts-only")
    assert sum(int(line.split("\t")[2]) for line in out.splitlines()[1:]) == 34
    target = tmp_path / "c.tsv"
    code, out, _ = run_cli(capsys, "census", "--rank", "2", "--length", "10", "--shards", "3",
                           "--all-shards", "--jobs", "2", "--output", str(target))
    assert code == 0 and len(target.read_text().splitlines()) == 218


def test_cli_checkpointed_census(capsys, tmp_path):
    target, ckpt = tmp_path / "c.tsv", tmp_path / "c.json"
    argv = ["census", "--rank", "2", "--length", "9", "--output", str(target),
            "--checkpoint-file", str(ckpt), "--checkpoint-every", "10"]
    assert run_cli(capsys, *argv)[0] == 0
    assert len(target.read_text().splitlines()) == 72
    assert run_cli(capsys, *argv)[0] == 0
    assert len(target.read_text().splitlines()) == 72


def test_cli_verify_tables_exit_codes(capsys, tmp_path):
    good = tmp_path / "good.csv"
    good.write_text("L,F2\n6,8\n")
    bad = tmp_path / "bad.csv"
    bad.write_text("L,F2\n6,9\n")
    assert run_cli(capsys, "verify-tables", str(good))[0] == 0
    code, out, _ = run_cli(capsys, "verify-tables", str(bad))
    assert code == 1 and "L=6 F2: expected 9, got 8" in out


def test_cli_usage_errors(capsys):
    assert run_cli(capsys, "reduce", "abq")[0] == 2
    assert run_cli(capsys, "enumerate", "--rank", "2")[0] == 2
    assert run_cli(capsys, "census", "--rank", "9", "--length", "3")[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_histogram(capsys):
    code, out, _ = run_cli(capsys, "histogram", "--rank", "3", "--length", "9")
    assert code == 0 and out.startswith("component_size,count,formula_match")


def test_cli_prover_pool(capsys, tmp_path):
    import sys

    script = tmp_path / "p.py"
    script.write_text("print('HYPERBOLIC')\n")
    cmd = f"{sys.executable} {script} {{file}}"
    code, out, _ = run_cli(capsys, "census", "--rank", "2", "--length", "8",
                           "--prover-cmd", cmd, "--prover-jobs", "3")
    verdicts = Counter(line.split("\t")[5] for line in out.splitlines()[1:])
    assert code == 0 and verdicts["Inconclusive"] == 0
    assert Counter(line.split("\t")[6] for line in out.splitlines()[1:])["external"] == 14
