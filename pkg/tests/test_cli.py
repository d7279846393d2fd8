import json
import subprocess
import sys
from fractions import Fraction

import pytest

from geomis import oracle
from geomis.cli import main, percolation_layout
from geomis.geometry import Interval


def run_cli(args):
    return main(args)


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run_cli(["gen", "--kind", "uniform", "--n", "10", "--seed", "1", "--out", str(a)]) == 0
    assert run_cli(["gen", "--kind", "uniform", "--n", "10", "--seed", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_nested_opt_is_one(tmp_path):
    out = tmp_path / "n.jsonl"
    run_cli(["gen", "--kind", "nested", "--n", "5", "--seed", "0", "--out", str(out)])
    ops = [json.loads(line) for line in out.read_text().splitlines()]
    items = [Interval(o["id"], Fraction(o["l"]), Fraction(o["r"])) for o in ops]
    assert oracle.exact_intervals(items)[0] == 1


def test_percolation_layout_chain():
    black, green, trigger = percolation_layout(blocks=4)
    items = []
    nid = 0
    for l, r in black + green:
        items.append(Interval(nid, Fraction(l), Fraction(r)))
        nid += 1
    members = items[: len(black)]
    # swap-free before the trigger
    assert oracle.find_alt_bruteforce(items, members, 2) is None
    # trigger enables a chain of exchanges percolating through the blocks
    items.append(Interval(nid, Fraction(trigger[0]), Fraction(trigger[1])))
    chain = 0
    two_for_three = 0
    while True:
        got = oracle.find_alt_bruteforce(items, members, 2)
        if got is None:
            break
        removed, added = got
        chain += 1
        if len(removed) == 2:
            two_for_three += 1
        removed_ids = {x.id for x in removed}
        members = [m for m in members if m.id not in removed_ids] + added
        assert chain < 50
    assert chain >= 4
    assert two_for_three >= 2


def test_run_intervals_checked(tmp_path):
    trace = tmp_path / "t.jsonl"
    run_cli(["gen", "--kind", "uniform", "--n", "120", "--seed", "3", "--out", str(trace)])
    deltas = tmp_path / "d.jsonl"
    csv_out = tmp_path / "m.csv"
    rc = run_cli(
        ["run", "intervals", "--trace", str(trace), "--k", "2", "--check",
         "--deltas", str(deltas), "--csv", str(csv_out)]
    )
    assert rc == 0
    lines = [json.loads(x) for x in deltas.read_text().splitlines()]
    reported = set()
    for d in lines:
        reported |= set(d["add"])
        reported -= set(d["remove"])
    assert csv_out.exists()
    assert len(lines) == 120


def test_run_squares_checked(tmp_path):
    trace = tmp_path / "s.jsonl"
    run_cli(["gen", "--kind", "clustered-squares", "--n", "150", "--seed", "5", "--out", str(trace)])
    deltas = tmp_path / "d.jsonl"
    rc = run_cli(
        ["run", "squares", "--trace", str(trace), "--seed", "7", "--check", "--deltas", str(deltas)]
    )
    assert rc == 0


def test_run_empty_trace(tmp_path):
    trace = tmp_path / "e.jsonl"
    trace.write_text("")
    rc = run_cli(["run", "intervals", "--trace", str(trace), "--k", "2", "--deltas", str(tmp_path / "d")])
    assert rc == 0


def test_bench_single_size(tmp_path):
    csv_out = tmp_path / "b.csv"
    rc = run_cli(
        ["bench", "--structure", "intervals", "--sizes", "256", "--reps", "2",
         "--batch", "30", "--csv", str(csv_out)]
    )
    assert rc == 0
    assert csv_out.read_text().count("\n") == 2


def test_bench_rejects_zero_reps(tmp_path):
    rc = run_cli(["bench", "--structure", "intervals", "--sizes", "256", "--reps", "0"])
    assert rc == 2


def test_console_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "geomis", "gen", "--kind", "nested", "--n", "3", "--out", "/dev/null"],
        capture_output=True,
    )
    assert proc.returncode == 0
