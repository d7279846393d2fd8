"""Command-line harness: workload generation, checked replay, benchmarks.

Traces are JSONL (one operation per line), deltas stream as JSONL, metrics
land in CSV.  `run ... --check` asserts the full invariant battery after
every operation and exits non-zero on the first failure, dumping the
offending state.
"""

from __future__ import annotations

import argparse
import csv
import json
import random
import statistics
import sys
import time
from fractions import Fraction

from geomis import oracle
from geomis.geometry import Interval, Square, format_key, parse_key
from geomis.interval_mis import IntervalMis
from geomis.iqds import IntervalStore
from geomis.quadtree import DynamicSquares
from geomis.static_pipeline import QUADRANT_ORDER

# ---------------------------------------------------------------------------
# generators


def _trace_uniform(n: int, rng: random.Random, span: int = 10_000, max_live: int = 300):
    live = {}
    next_id = 0
    ops = []
    while len(ops) < n:
        if live and (len(live) >= max_live or rng.random() < 0.45):
            iid = rng.choice(list(live))
            l, r = live.pop(iid)
            ops.append({"op": "delete", "id": iid, "l": str(l), "r": str(r)})
        else:
            l = rng.randint(0, span)
            r = l + rng.randint(1, span // 20)
            live[next_id] = (l, r)
            ops.append({"op": "insert", "id": next_id, "l": str(l), "r": str(r)})
            next_id += 1
    return ops


def _trace_nested(n: int, rng: random.Random):
    return [
        {"op": "insert", "id": i, "l": str(i), "r": str(4 * n - i)}
        for i in range(n)
    ]


def percolation_layout(blocks: int):
    """Interval family whose locally optimal set collapses in a chain of
    2-for-3 swaps once the trigger lands; the initial swap-free set is the
    `black` intervals."""
    black, green = [], []
    black.append((176, 196))  # center
    for i in range(blocks):
        base = 200 + 48 * i
        black.append((base, base + 20))
        black.append((base + 24, base + 44))
        green.append((base - 15, base - 12))
        green.append((base - 5, base + 19))
        green.append((base + 20, base + 30))
    trigger = (180, 183)
    return black, green, trigger


def _trace_percolation(n: int, rng: random.Random):
    blocks = max(1, (n - 2) // 5)
    black, green, trigger = percolation_layout(blocks)
    ops = []
    nid = 0
    for l, r in black + green:
        ops.append({"op": "insert", "id": nid, "l": str(l), "r": str(r)})
        nid += 1
    ops.append({"op": "insert", "id": nid, "l": str(trigger[0]), "r": str(trigger[1])})
    return ops


def _trace_clustered_squares(n: int, rng: random.Random, max_live: int = 200):
    centers = [(rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)) for _ in range(max(1, n // 60))]
    live = {}
    next_id = 0
    ops = []
    while len(ops) < n:
        if live and (len(live) >= max_live or rng.random() < 0.45):
            iid = rng.choice(list(live))
            x, y, size = live.pop(iid)
            ops.append({"op": "delete", "id": iid, "x": x, "y": y, "size": size})
        else:
            cx, cy = rng.choice(centers)
            size = min(0.2, abs(rng.gauss(0.03, 0.03)) + 1e-3)
            x = min(max(rng.gauss(cx, 0.08), 0.0), 1.0 - size)
            y = min(max(rng.gauss(cy, 0.08), 0.0), 1.0 - size)
            live[next_id] = (x, y, size)
            ops.append({"op": "insert", "id": next_id, "x": x, "y": y, "size": size})
            next_id += 1
    return ops


GENERATORS = {
    "uniform": _trace_uniform,
    "nested": _trace_nested,
    "adversarial-percolation": _trace_percolation,
    "clustered-squares": _trace_clustered_squares,
}


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    ops = GENERATORS[args.kind](args.n, rng)
    with open(args.out, "w") as fh:
        for op in ops:
            fh.write(json.dumps(op, sort_keys=True) + "\n")
    print(f"wrote {len(ops)} ops to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# checked runs


def _load_trace(path: str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _interval_of(op: dict) -> Interval:
    return Interval(op["id"], parse_key(op["l"]), parse_key(op["r"]))


def _square_of(op: dict) -> Square:
    return Square(op["id"], op["x"], op["y"], op["size"])


def _dump_interval_state(mis: IntervalMis) -> dict:
    return {
        "S": [
            {"id": iv.id, "l": format_key(iv.l), "r": format_key(iv.r)}
            for iv in mis.S.items_by_l()
        ],
        "I": [iv.id for iv in mis.members()],
        "k": mis.k,
    }


def _timed(fn):
    t0 = time.monotonic()
    out = fn()
    return out, (time.monotonic() - t0) * 1e6


def _metrics_row(structure, label, times_us, reported, opt, delta_volume):
    ratio = (len(reported) / opt) if opt else ""
    return {
        "structure": structure,
        "param": label,
        "ops": len(times_us),
        "mean_us": round(statistics.fmean(times_us), 2) if times_us else 0,
        "median_us": round(statistics.median(times_us), 2) if times_us else 0,
        "p99_us": round(sorted(times_us)[int(0.99 * (len(times_us) - 1))], 2) if times_us else 0,
        "members": len(reported),
        "opt": opt if opt else "",
        "ratio": round(ratio, 4) if ratio != "" else "",
        "delta_volume": delta_volume,
    }


def _write_csv(path, rows):
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def cmd_run(args) -> int:
    trace = _load_trace(args.trace)
    deltas_out = open(args.deltas, "w") if args.deltas else sys.stdout
    times, delta_volume = [], 0
    reported: set[int] = set()
    try:
        if args.structure == "intervals":
            mis = IntervalMis(k=args.k)
            for i, op in enumerate(trace):
                iv = _interval_of(op)
                d, us = _timed(lambda: mis.insert(iv) if op["op"] == "insert" else mis.delete(iv))
                times.append(us)
                delta_volume += len(d)
                d.apply_to(reported)
                deltas_out.write(json.dumps(d.to_json(), sort_keys=True) + "\n")
                if args.check:
                    if reported != {x.id for x in mis.members()}:
                        raise AssertionError("delta replay diverged")
                    if not mis.verify_k_valid():
                        raise AssertionError(f"state not locally optimal after op {i}")
                    opt, _ = oracle.exact_intervals(mis.S.items_by_l())
                    if 2 * len(mis.members()) < opt:
                        raise AssertionError(f"quality floor violated after op {i}")
            opt, _ = oracle.exact_intervals(mis.S.items_by_l())
            row = _metrics_row("intervals", f"k={args.k}", times, reported, opt, delta_volume)
        else:
            gs = DynamicSquares(seed=args.seed, k=args.k)
            rng = random.Random(args.seed ^ 0xC0FFEE)
            for i, op in enumerate(trace):
                sq = _square_of(op)
                d, us = _timed(lambda: gs.insert(sq) if op["op"] == "insert" else gs.delete(sq))
                times.append(us)
                delta_volume += len(d)
                d.apply_to(reported)
                deltas_out.write(json.dumps(d.to_json(), sort_keys=True) + "\n")
                if args.check:
                    if reported != gs.reported():
                        raise AssertionError("delta replay diverged")
                    gs.check_structure()
                    gs.check_paths(deep=(i % 50 == 0))
                    _probe_paths(gs, rng, probes=10)
            opt = None
            if args.check and len(gs.squares) + len(gs.noncentered) <= 60:
                opt, _ = oracle.exact_squares(list(gs.originals.values()))
            row = _metrics_row("squares", f"seed={args.seed}", times, reported, opt, delta_volume)
    except AssertionError as exc:
        state = _dump_interval_state(mis) if args.structure == "intervals" else {"squares": len(reported)}
        print(json.dumps({"error": str(exc), "state": state}), file=sys.stderr)
        return 1
    finally:
        if args.deltas:
            deltas_out.close()
    if args.csv:
        _write_csv(args.csv, [row])
    print(json.dumps(row, sort_keys=True))
    return 0


def _probe_paths(gs: DynamicSquares, rng: random.Random, probes: int) -> None:
    paths = list(gs.paths)
    if not paths:
        return
    for _ in range(probes):
        p = rng.choice(paths)
        q = rng.choice(QUADRANT_ORDER)
        view = p.views[q]
        items = view.items_by_l()
        explicit = IntervalStore(seed=0)
        for iv in items:
            explicit.insert(iv)
        vals = [iv.l for iv in items] + [iv.r for iv in items] + [None]
        a, b = rng.choice(vals), rng.choice(vals)
        if a is not None and b is not None and a >= b:
            continue
        if view.leftmost_right(a, b) != explicit.leftmost_right(a, b):
            raise AssertionError("implicit/explicit disagreement")
        if view.rightmost_left(a, b) != explicit.rightmost_left(a, b):
            raise AssertionError("implicit/explicit disagreement")


# ---------------------------------------------------------------------------
# benchmarks


def _parse_sizes(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..")
        parse = lambda s: 2 ** int(s[2:]) if s.startswith("2^") else int(s)
        a, b = parse(lo), parse(hi)
        out = []
        while a <= b:
            out.append(a)
            a *= 2
        return out
    return [2 ** int(s[2:]) if s.startswith("2^") else int(s) for s in spec.split(",")]


def bench_intervals(n: int, reps: int, batch: int, k: int, seed: int):
    rng = random.Random(seed)
    mis = IntervalMis(k=k, seed=seed)
    live = []
    span = 50 * n
    for i in range(n):
        l = rng.randint(0, span)
        iv = Interval(i, l, l + rng.randint(1, 40))
        mis.insert(iv)
        live.append(iv)
    next_id = n
    rep_means = []
    for _ in range(reps):
        t0 = time.monotonic()
        for _ in range(batch):
            idx = rng.randrange(len(live))
            victim = live[idx]
            live[idx] = live[-1]
            live.pop()
            mis.delete(victim)
            l = rng.randint(0, span)
            iv = Interval(next_id, l, l + rng.randint(1, 40))
            next_id += 1
            mis.insert(iv)
            live.append(iv)
        rep_means.append((time.monotonic() - t0) * 1e6 / (2 * batch))
    return rep_means


def bench_squares(n: int, reps: int, batch: int, k: int, seed: int):
    rng = random.Random(seed)
    gs = DynamicSquares(seed=seed, k=k)
    live = []
    next_id = 0

    def fresh():
        nonlocal next_id
        size = min(0.2, abs(rng.gauss(0.02, 0.02)) + 1e-4)
        s = Square(next_id, rng.uniform(0, 1 - size), rng.uniform(0, 1 - size), size)
        next_id += 1
        return s

    for _ in range(n):
        s = fresh()
        gs.insert(s)
        live.append(s)
    rep_means = []
    for _ in range(reps):
        t0 = time.monotonic()
        for _ in range(batch):
            idx = rng.randrange(len(live))
            victim = live[idx]
            live[idx] = live[-1]
            live.pop()
            gs.delete(victim)
            s = fresh()
            gs.insert(s)
            live.append(s)
        rep_means.append((time.monotonic() - t0) * 1e6 / (2 * batch))
    return rep_means


def cmd_bench(args) -> int:
    if args.reps <= 0:
        print("reps must be positive", file=sys.stderr)
        return 2
    sizes = _parse_sizes(args.sizes)
    rows = []
    prev_mean = None
    for n in sizes:
        fn = bench_intervals if args.structure == "intervals" else bench_squares
        rep_means = fn(n, args.reps, args.batch, args.k, args.seed)
        mean = statistics.fmean(rep_means)
        row = {
            "structure": args.structure,
            "n": n,
            "reps": args.reps,
            "mean_us": round(mean, 2),
            "median_us": round(statistics.median(rep_means), 2),
            "p99_us": round(max(rep_means), 2),
            "ratio_vs_half": round(mean / prev_mean, 3) if prev_mean else "",
        }
        rows.append(row)
        prev_mean = mean
        print(json.dumps(row, sort_keys=True))
    if args.csv:
        _write_csv(args.csv, rows)
    return 0


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geomis", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a deterministic trace")
    g.add_argument("--kind", choices=sorted(GENERATORS), required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    r = sub.add_parser("run", help="replay a trace, optionally checking invariants")
    r.add_argument("structure", choices=["intervals", "squares"])
    r.add_argument("--trace", required=True)
    r.add_argument("--k", type=int, default=2)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--check", action="store_true")
    r.add_argument("--deltas", help="write the delta stream here instead of stdout")
    r.add_argument("--csv", help="append a metrics row to this CSV")
    r.set_defaults(fn=cmd_run)

    b = sub.add_parser("bench", help="update-time scaling measurements")
    b.add_argument("--structure", choices=["intervals", "squares"], required=True)
    b.add_argument("--sizes", required=True, help="e.g. 2^12..2^18 or 1024,2048")
    b.add_argument("--reps", type=int, required=True)
    b.add_argument("--batch", type=int, default=200)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv")
    b.set_defaults(fn=cmd_bench)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
