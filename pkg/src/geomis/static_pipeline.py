"""Batch pipeline from squares to an approximate independent set.

Centered squares are grouped by their minimal quadtree cell; the finite tree
over those cells decomposes into leaves, branching nodes, and single-child
chains.  Along each chain, squares whose nodes share a child quadrant map to
depth intervals whose independence (after alternate thinning) implies square
independence, so a one-dimensional solver does the heavy lifting per chain
and per quadrant; the best quadrant is kept globally, plus one square per
leaf.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from geomis.errors import PreconditionError
from geomis.geometry import (
    CellId,
    Interval,
    QuadrantLabel,
    QuadRoot,
    QuantizedSquare,
    Square,
    quadrant_from_bits,
)
from geomis.interval_mis import IntervalMis

QUADRANT_ORDER = [QuadrantLabel.I, QuadrantLabel.II, QuadrantLabel.III, QuadrantLabel.IV]

# tiny per-id offset making interval endpoints distinct; smaller than any
# geometric gap between padded depth intervals
DELTA_DEN = 1 << 70


def depth_delta(square_id: int) -> Fraction:
    return Fraction((square_id % (1 << 63)) + 1, DELTA_DEN)


def padded_interval(square_id: int, lo: int, hi: int) -> Interval:
    d = depth_delta(square_id)
    return Interval(square_id, Fraction(lo) - Fraction(1, 3) + d, Fraction(hi) + Fraction(1, 3) + d)


@dataclass(frozen=True)
class PathDescriptor:
    """Single-child chain strictly between two non-chain bookend cells."""

    top: CellId
    bottom: CellId

    def __post_init__(self):
        if not self.top.is_ancestor_of(self.bottom):
            raise PreconditionError(f"path bookends not nested: {self.top} {self.bottom}")

    def member_depths(self) -> range:
        return range(self.top.depth + 1, self.bottom.depth)

    def cell_at(self, depth: int) -> CellId:
        if not self.top.depth < depth < self.bottom.depth:
            raise PreconditionError(f"depth {depth} off the path {self}")
        return self.bottom.ancestor_at(depth)

    def label_at(self, depth: int) -> QuadrantLabel:
        """Quadrant of the chain node's single child (toward the bottom)."""
        child = self.bottom.ancestor_at(depth + 1)
        return quadrant_from_bits(child.ix & 1, child.iy & 1)

    def quadrant_depths(self, q: QuadrantLabel) -> list[int]:
        return [d for d in self.member_depths() if self.label_at(d) == q]


@dataclass
class Decomposition:
    leaves: list[CellId] = field(default_factory=list)
    internal: list[CellId] = field(default_factory=list)
    paths: list[PathDescriptor] = field(default_factory=list)
    squares_by_node: dict[CellId, list[QuantizedSquare]] = field(default_factory=dict)

    def signature(self) -> tuple:
        return (
            frozenset(self.leaves),
            frozenset(self.internal),
            frozenset((p.top, p.bottom) for p in self.paths),
        )


def _zlo(cell: CellId, bits: int) -> int:
    z = 0
    for i in range(cell.depth):
        z = (z << 2) | (((cell.ix >> (cell.depth - 1 - i)) & 1) << 1) | ((cell.iy >> (cell.depth - 1 - i)) & 1)
    return z << (2 * (bits - cell.depth))


def _lca(a: CellId, b: CellId) -> CellId:
    m = min(a.depth, b.depth)
    ax, ay = a.ix >> (a.depth - m), a.iy >> (a.depth - m)
    bx, by = b.ix >> (b.depth - m), b.iy >> (b.depth - m)
    shift = max((ax ^ bx).bit_length(), (ay ^ by).bit_length())
    return CellId(m - shift, ax >> shift, ay >> shift)


def decompose(centered: list[QuantizedSquare], root: QuadRoot) -> Decomposition:
    """Classify the marked cells and their branching ancestors."""
    out = Decomposition()
    for q in centered:
        out.squares_by_node.setdefault(root.node_of(q), []).append(q)
    if not out.squares_by_node:
        return out
    marked = set(out.squares_by_node)
    relevant = set(marked)
    relevant.add(CellId(0, 0, 0))
    by_z = sorted(marked, key=lambda c: (_zlo(c, root.bits), c.depth))
    for a, b in zip(by_z, by_z[1:]):
        relevant.add(_lca(a, b))

    order = sorted(relevant, key=lambda c: (_zlo(c, root.bits), c.depth))
    parent: dict[CellId, Optional[CellId]] = {}
    children: dict[CellId, list[CellId]] = {c: [] for c in order}
    stack: list[CellId] = []
    for cell in order:
        while stack and not (stack[-1] == cell or stack[-1].is_ancestor_of(cell)):
            stack.pop()
        parent[cell] = stack[-1] if stack else None
        if stack:
            children[stack[-1]].append(cell)
        stack.append(cell)

    for cell in order:
        n = len(children[cell])
        if cell.depth == 0:
            if n == 0 and cell in marked:
                out.leaves.append(cell)
            else:
                out.internal.append(cell)
        elif n == 0:
            out.leaves.append(cell)
        elif n >= 2:
            out.internal.append(cell)
    bookends = set(out.leaves) | set(out.internal)

    for cell in sorted(bookends - {CellId(0, 0, 0)}, key=lambda c: (_zlo(c, root.bits), c.depth)):
        anc = parent[cell]
        while anc is not None and anc not in bookends:
            anc = parent[anc]
        if anc is not None:
            out.paths.append(PathDescriptor(anc, cell))
    return out


def monotone_intervals(
    p: PathDescriptor,
    q: QuadrantLabel,
    squares: list[QuantizedSquare],
    root: QuadRoot,
) -> list[tuple[int, tuple[int, int]]]:
    """Depth interval [own depth, deepest same-quadrant chain center covered]
    for every square whose node sits on the chain with child-quadrant q."""
    depths = p.quadrant_depths(q)
    out = []
    for s in squares:
        node = root.node_of(s)
        lo = node.depth
        if p.cell_at(lo) != node or p.label_at(lo) != q:
            raise PreconditionError(f"square {s.id} is not on the {q} subpath")
        # covered chain centers form a prefix of the deeper part of the chain
        start = bisect.bisect_left(depths, lo)
        lo_i, hi_i = start, len(depths) - 1
        best = lo
        while lo_i <= hi_i:
            mid = (lo_i + hi_i) // 2
            cx2, cy2 = root.cell_center2(p.cell_at(depths[mid]))
            if root.square_contains_point2(s, cx2, cy2):
                best = depths[mid]
                lo_i = mid + 1
            else:
                hi_i = mid - 1
        out.append((s.id, (lo, best)))
    return out


def half(sorted_ids: list[int]) -> list[int]:
    """Drop every other element starting from the deepest (the last)."""
    n = len(sorted_ids)
    return [x for i, x in enumerate(sorted_ids) if (n - 1 - i) % 2 == 1]


def greedy_depth_intervals(items: list[tuple[int, tuple[int, int]]]) -> list[int]:
    """Exact interval MIS over closed integer depth intervals; returns ids by depth."""
    chosen: list[tuple[int, tuple[int, int]]] = []
    frontier = None
    for sid, (lo, hi) in sorted(items, key=lambda it: (it[1][1], it[1][0], it[0])):
        if frontier is None or lo > frontier:
            chosen.append((sid, (lo, hi)))
            frontier = hi
    chosen.sort(key=lambda it: (it[1][0], it[0]))
    return [sid for sid, _ in chosen]


def local_search_depth_intervals(items: list[tuple[int, tuple[int, int]]], k: int = 2) -> list[int]:
    """Approximate solver routed through the dynamic interval structure."""
    mis = IntervalMis(k=k, seed=7)
    for sid, (lo, hi) in sorted(items):
        mis.insert(padded_interval(sid, lo, hi))
    return [iv.id for iv in mis.members()]


def solve_static(
    squares: list[Square],
    seed: int,
    interval_solver: str = "exact",
) -> tuple[list[int], dict]:
    """Full batch pipeline; returns chosen square ids and run statistics."""
    root = QuadRoot(seed)
    quantized = {s.id: root.quantize(s) for s in squares}
    centered = [q for q in quantized.values() if root.is_centered(q)]
    deco = decompose(centered, root)

    solver = greedy_depth_intervals if interval_solver == "exact" else local_search_depth_intervals
    per_quadrant_total: dict[QuadrantLabel, int] = {q: 0 for q in QUADRANT_ORDER}
    per_quadrant_choice: dict[QuadrantLabel, list[list[int]]] = {q: [] for q in QUADRANT_ORDER}
    for p in deco.paths:
        on_path: dict[QuadrantLabel, list[QuantizedSquare]] = {q: [] for q in QUADRANT_ORDER}
        for d in p.member_depths():
            cell = p.cell_at(d)
            if cell in deco.squares_by_node:
                on_path[p.label_at(d)].extend(deco.squares_by_node[cell])
        for q in QUADRANT_ORDER:
            if not on_path[q]:
                continue
            items = monotone_intervals(p, q, on_path[q], root)
            depth_of = dict(items)
            ind = solver(items)
            ind.sort(key=lambda sid: (depth_of[sid][0], sid))
            kept = half(ind)
            per_quadrant_total[q] += len(kept)
            per_quadrant_choice[q].append(kept)

    best_q = max(QUADRANT_ORDER, key=lambda q: (per_quadrant_total[q], -QUADRANT_ORDER.index(q)))
    chosen: list[int] = []
    for cell in deco.leaves:
        chosen.append(min(s.id for s in deco.squares_by_node[cell]))
    for kept in per_quadrant_choice[best_q]:
        chosen.extend(kept)

    stats = {
        "n": len(squares),
        "centered": len(centered),
        "leaves": len(deco.leaves),
        "paths": len(deco.paths),
        "output": len(chosen),
        "seed": seed,
        "quadrant": best_q.name,
    }
    return chosen, stats
