"""Per-chain maintenance of a protected approximate independent set.

Each single-child chain keeps, per child quadrant, a dynamic interval
structure over the squares' depth intervals (answered implicitly from the
global store) and an ordered sequence mirroring that structure's members.  A
"chosen" subset of each sequence keeps 1-3 unchosen elements between chosen
ones and unchosen extremes, so chosen squares are pairwise disjoint and
avoid the chain's bottom cell.  One quadrant is active; its chosen squares
are the chain's reported contribution, and the active quadrant is switched
only when it falls below half of the largest, which amortizes re-reporting.

Chain surgery (split, merge, extend, contract) runs the sentinel protocols:
before intervals can silently grow, a tiny sentinel interval is inserted at
the frontier depth, forcing growers out of the member set; boundary
truncation is preceded by pulling the deepest-starting interval into the
member set; a boundary phantom insert/delete pair repairs what truncation
frees.
"""

from __future__ import annotations

import bisect
import itertools
from fractions import Fraction
from typing import Optional

from geomis.errors import InternalInvariantError, PreconditionError
from geomis.geometry import Interval, QuadrantLabel, QuantizedSquare
from geomis.implicit_iqds import PathQuadrantView
from geomis.interval_mis import Delta, IntervalMis
from geomis.static_pipeline import QUADRANT_ORDER, PathDescriptor

THIRD = Fraction(1, 3)
_synth = itertools.count(-1_000_003, -1)


class ChosenSeq:
    """Sorted keys with a locally repaired chosen subset.

    Gaps between chosen keys hold 1-3 unchosen keys; the head and tail runs
    hold 1-3 as well (a fully unchosen sequence has at most 3 keys); the
    minimum and maximum are never chosen.  Repairs touch O(1) keys per edit.
    """

    def __init__(self):
        self.keys: list = []
        self.chosen: set = set()

    def __len__(self):
        return len(self.keys)

    def chosen_ids(self) -> set:
        return {key[1] for key in self.chosen}

    def insert(self, key) -> None:
        i = bisect.bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            raise PreconditionError(f"key {key} already present")
        self.keys.insert(i, key)
        self._repair(i)

    def remove(self, key) -> None:
        i = bisect.bisect_left(self.keys, key)
        if i >= len(self.keys) or self.keys[i] != key:
            raise PreconditionError(f"key {key} not present")
        self.keys.pop(i)
        self.chosen.discard(key)
        self._repair(min(i, len(self.keys) - 1))

    def split(self, bound) -> "ChosenSeq":
        """Keep keys < bound; return the rest as a new sequence."""
        i = bisect.bisect_left(self.keys, bound)
        right = ChosenSeq()
        right.keys = self.keys[i:]
        self.keys = self.keys[:i]
        right.chosen = {k for k in self.chosen if k >= bound}
        self.chosen = {k for k in self.chosen if k < bound}
        self._repair(len(self.keys) - 1)
        right._repair(0)
        return right

    def merge(self, other: "ChosenSeq") -> None:
        if self.keys and other.keys and self.keys[-1] >= other.keys[0]:
            raise PreconditionError("sequences interleave")
        junction = len(self.keys)
        self.keys.extend(other.keys)
        self.chosen |= other.chosen
        self._repair(junction)

    # -- local repair --------------------------------------------------------

    def _run_around(self, i: int) -> tuple[int, int]:
        """Maximal unchosen run containing index i (i must be unchosen)."""
        lo = i
        while lo > 0 and self.keys[lo - 1] not in self.chosen:
            lo -= 1
        hi = i
        while hi + 1 < len(self.keys) and self.keys[hi + 1] not in self.chosen:
            hi += 1
        return lo, hi

    def _repair(self, i: int) -> None:
        if not self.keys:
            self.chosen.clear()
            return
        work = [max(0, min(i, len(self.keys) - 1))]
        rounds = 0
        while work:
            rounds += 1
            if rounds > 512:
                raise InternalInvariantError("chosen repair did not converge")
            n = len(self.keys)
            j = max(0, min(work.pop(), n - 1))
            if self.keys[0] in self.chosen:
                self.chosen.discard(self.keys[0])
                work.extend((j, 0))
                continue
            if self.keys[-1] in self.chosen:
                self.chosen.discard(self.keys[-1])
                work.extend((j, n - 1))
                continue
            adjacent = None
            for a in range(max(0, j - 5), min(n - 1, j + 5)):
                if self.keys[a] in self.chosen and self.keys[a + 1] in self.chosen:
                    adjacent = a + 1
                    break
            if adjacent is not None:
                self.chosen.discard(self.keys[adjacent])
                work.extend((j, adjacent))
                continue
            if self.keys[j] in self.chosen:
                continue
            lo, hi = self._run_around(j)
            if hi - lo + 1 > 3:
                mid = (lo + hi) // 2
                self.chosen.add(self.keys[mid])
                work.extend((max(lo, mid - 1), min(hi, mid + 1)))

    def check(self) -> None:
        n = len(self.keys)
        marks = [k in self.chosen for k in self.keys]
        if n == 0:
            assert not self.chosen
            return
        assert not marks[0] and not marks[-1], "extreme key chosen"
        if not any(marks):
            assert n <= 3, f"unchosen sequence of {n}"
            return
        run = 0
        seen = False
        for flag in marks:
            if flag:
                assert (not seen and 1 <= run <= 3) or (seen and 1 <= run <= 3), f"gap {run}"
                run = 0
                seen = True
            else:
                run += 1
        assert 1 <= run <= 3, f"tail run {run}"


class PathStructure:
    """Reported protected independent set for one single-child chain."""

    def __init__(self, gs, top, bottom):
        self.gs = gs
        self.descriptor = PathDescriptor(top, bottom)
        self.root = gs.root
        self.store = gs.store
        self.views: dict[QuadrantLabel, PathQuadrantView] = {}
        self.mis: dict[QuadrantLabel, IntervalMis] = {}
        self.seq: dict[QuadrantLabel, ChosenSeq] = {}
        for q in QUADRANT_ORDER:
            view = PathQuadrantView(self, q)
            self.views[q] = view
            self.mis[q] = IntervalMis(k=gs.k, s_view=view)
            self.seq[q] = ChosenSeq()
        self.active = QuadrantLabel.I

    # owner protocol for the views
    def square_by_id(self, sid: int) -> QuantizedSquare:
        return self.gs.square_by_id(sid)

    def node_square_list(self, cell) -> list[QuantizedSquare]:
        return self.gs.node_square_list(cell)

    @property
    def top(self):
        return self.descriptor.top

    @property
    def bottom(self):
        return self.descriptor.bottom

    def reported(self) -> set:
        return self.seq[self.active].chosen_ids()

    def sizes(self) -> dict[QuadrantLabel, int]:
        return {q: len(self.seq[q]) for q in QUADRANT_ORDER}

    # -- plumbing ------------------------------------------------------------

    def _apply_interval_delta(self, q: QuadrantLabel, d: Delta) -> None:
        for op, iid in d.entries:
            if iid < 0:
                continue  # synthetic sentinels never join the sequence
            iv = d.values[iid]
            if op == "add":
                self.seq[q].insert((iv.l, iid))
            else:
                self.seq[q].remove((iv.l, iid))

    def _rebalance(self) -> None:
        sizes = self.sizes()
        biggest = max(QUADRANT_ORDER, key=lambda q: (sizes[q], -QUADRANT_ORDER.index(q)))
        if 2 * sizes[self.active] < sizes[biggest]:
            self.active = biggest

    def _finish(self, before: set) -> Delta:
        self._rebalance()
        after = self.reported()
        delta = Delta()
        for sid in sorted(before - after):
            delta.entries.append(("remove", sid))
        for sid in sorted(after - before):
            delta.entries.append(("add", sid))
        return delta

    # -- updates ----------------------------------------------------------------

    def update(self, kind: str, q_square: QuantizedSquare) -> Delta:
        before = self.reported()
        node = self.root.node_of(q_square)
        q = self.descriptor.label_at(node.depth)
        view = self.views[q]
        iv = view.get_interval(q_square)
        if kind == "insert":
            d = self.mis[q].insert(iv)
        else:
            stored = self.mis[q].I.get(iv.id)
            d = self.mis[q].delete(stored if stored is not None else iv)
        self._apply_interval_delta(q, d)
        return self._finish(before)

    # -- sentinel helpers ---------------------------------------------------------

    def _insert_frontier_sentinels(self) -> dict[QuadrantLabel, Interval]:
        """Force intervals reaching each quadrant's deepest node out of the
        member sets, so the pending growth only touches non-members."""
        sentinels = {}
        for q in QUADRANT_ORDER:
            depths = self.descriptor.quadrant_depths(q)
            if not depths:
                continue
            d1 = depths[-1]
            b = Interval(next(_synth), Fraction(d1) - Fraction(1, 6), Fraction(d1) + THIRD, synthetic=True)
            d = self.mis[q].insert(b)
            self._apply_interval_delta(q, d)
            sentinels[q] = b
        return sentinels

    def _remove_sentinels(self, sentinels: dict) -> None:
        for q, b in sentinels.items():
            d = self.mis[q].delete(b)
            self._apply_interval_delta(q, d)

    def _merge_singleton(self, node_cell) -> None:
        """Adopt one square of a node newly joining the chain, resolving
        conflicts through a tiny separator round trip."""
        squares = self.node_square_list(node_cell)
        if not squares:
            return
        q = self.descriptor.label_at(node_cell.depth)
        view = self.views[q]
        best = min(squares, key=lambda s: (view.get_interval_raw(s)[1], s.id))
        s_iv = view.get_interval(best)
        depth = node_cell.depth
        t = Fraction(depth) - THIRD
        mates = sorted(view.get_interval(s).l for s in squares)
        ne = mates[0]
        m1 = t + (ne - t) / 2
        m2 = m1 + (ne - m1) / 2
        mis = self.mis[q]
        b = Interval(next(_synth), m1, m2, synthetic=True)
        d = mis.insert(b)
        self._apply_interval_delta(q, d)
        d2 = Delta()
        mis._i_add(s_iv, d2)
        self._apply_interval_delta(q, d2)
        d3 = mis.delete(b)
        self._apply_interval_delta(q, d3)

    def _remove_node_members(self, node_cell) -> None:
        """Run proper deletions for members whose node leaves the chain."""
        squares = self.node_square_list(node_cell)
        if not squares:
            return
        q = self.descriptor.label_at(node_cell.depth)
        mis = self.mis[q]
        for s in squares:
            stored = mis.I.get(s.id)
            if stored is not None:
                d = mis.delete(stored)
                self._apply_interval_delta(q, d)

    def _ensure_boundary_member(self, q: QuadrantLabel, cut_depth: int) -> None:
        """Pull the deepest-starting upper-part interval into the member set
        before truncation (members other than it never cross the boundary)."""
        view = self.views[q]
        mis = self.mis[q]
        depths = view.quadrant_depths()
        upper = [d for d in depths if d < cut_depth]
        if not upper:
            return
        tau = view._max_l_in_lo_range((upper[0], upper[-1]), None)
        if tau is None or tau.id in mis.I:
            return
        bound = Fraction(cut_depth) - THIRD
        x = mis.I.by_l.pred((bound, float("-inf")))
        delta = Delta()
        if x is not None:
            mis._i_remove(x, delta)
        mis._i_add(tau, delta)
        pred = mis.I.pred_with_l_lt(tau.l)
        path = mis._find_left(mis.k, pred.r if pred is not None else None, tau.l)
        if path is not None:
            path = mis.to_sibling(path)
            mis._apply_exchange(path, delta)
        self._apply_interval_delta(q, delta)

    def _refresh_member_values(self, q: QuadrantLabel) -> None:
        """Re-derive stored member intervals whose geometry moved (the chain's
        frontier changed); keys keep their left endpoints, so sequences are
        unaffected."""
        mis = self.mis[q]
        view = self.views[q]
        for iv in list(mis.I.items_by_l()):
            if iv.synthetic:
                continue
            fresh = view.get_interval(self.square_by_id(iv.id))
            if fresh != iv:
                mis.I.delete(iv)
                mis.I.insert(fresh)

    def _boundary_repair(self, q: QuadrantLabel) -> None:
        """Phantom round trip at the chain's shallow edge: anything freed by
        boundary truncation sits in the first gap and gets repaired by a
        standard deletion."""
        mis = self.mis[q]
        first = mis.I.min_by_l()
        depths = self.views[q].quadrant_depths()
        base = Fraction(depths[0]) - 1 if depths else Fraction(0)
        anchor = min(base, first.l - 1) if first is not None else base
        p = Interval(next(_synth), anchor - Fraction(2, 3), anchor - Fraction(1, 3), synthetic=True)
        d = mis.insert(p)
        self._apply_interval_delta(q, d)
        d2 = mis.delete(p)
        self._apply_interval_delta(q, d2)

    # -- chain surgery --------------------------------------------------------------

    def extend(self, new_bottom) -> Delta:
        """Move the bottom deeper; the old bottom node joins the chain."""
        if not self.bottom.is_ancestor_of(new_bottom):
            raise PreconditionError("extend target must lie below the bottom")
        before = self.reported()
        old_bottom = self.bottom
        sentinels = self._insert_frontier_sentinels()
        self.descriptor = PathDescriptor(self.top, new_bottom)
        self._merge_singleton(old_bottom)
        self._remove_sentinels(sentinels)
        return self._finish(before)

    def contract(self, new_bottom) -> Delta:
        """Move the bottom up to a chain node; nothing marked lies below."""
        if new_bottom != self.top and not (
            self.top.is_ancestor_of(new_bottom) and new_bottom.is_ancestor_of(self.bottom)
        ):
            raise PreconditionError("contract target must be on the chain")
        before = self.reported()
        cut = new_bottom.depth
        self._remove_node_members(new_bottom)
        for q in QUADRANT_ORDER:
            self._ensure_boundary_member(q, cut)
            kept, dropped = self.mis[q].I.split(Fraction(cut))
            if len(dropped):
                raise InternalInvariantError("contract dropped live members")
            self.mis[q].I = kept
        self.descriptor = PathDescriptor(self.top, new_bottom)
        for q in QUADRANT_ORDER:
            self._refresh_member_values(q)
        return self._finish(before)

    def merge(self, other: "PathStructure") -> Delta:
        """Absorb an adjacent lower chain and the node between."""
        if other.top != self.bottom:
            raise PreconditionError("chains are not adjacent")
        before = self.reported() | other.reported()
        mid = self.bottom
        sentinels = self._insert_frontier_sentinels()
        self.descriptor = PathDescriptor(self.top, other.bottom)
        for q in QUADRANT_ORDER:
            if other.views[q].overlay:
                raise InternalInvariantError("merge with live synthetic intervals")
            bound = Fraction(mid.depth) + THIRD
            self.mis[q].I.merge(other.mis[q].I, bound)
            self.seq[q].merge(other.seq[q])
        self._merge_singleton(mid)
        self._remove_sentinels(sentinels)
        for q in QUADRANT_ORDER:
            self._refresh_member_values(q)
        return self._finish(before)

    def split(self, eta) -> tuple[Delta, "PathStructure"]:
        """Cut the chain at a node, which leaves the chain entirely."""
        if not (self.top.is_ancestor_of(eta) and eta.is_ancestor_of(self.bottom)):
            raise PreconditionError("split node must be on the chain")
        before = self.reported()
        cut = eta.depth
        self._remove_node_members(eta)
        lower = PathStructure(self.gs, eta, self.bottom)
        for q in QUADRANT_ORDER:
            self._ensure_boundary_member(q, cut)
            bound = Fraction(cut)
            kept, moved = self.mis[q].I.split(bound)
            self.mis[q].I = kept
            lower.mis[q].I = moved
            lower.seq[q] = self.seq[q].split((bound, float("-inf")))
        lower.active = self.active
        self.descriptor = PathDescriptor(self.top, eta)
        for q in QUADRANT_ORDER:
            self._refresh_member_values(q)
            lower._refresh_member_values(q)
            lower._boundary_repair(q)
        self._rebalance()
        lower._rebalance()
        combined = Delta()
        seen_after = self.reported() | lower.reported()
        for sid in sorted(before - seen_after):
            combined.entries.append(("remove", sid))
        for sid in sorted(seen_after - before):
            combined.entries.append(("add", sid))
        return combined, lower

    # -- verification -----------------------------------------------------------------

    def check_invariants(self, deep: bool = True) -> None:
        for q in QUADRANT_ORDER:
            seq = self.seq[q]
            seq.check()
            members = [iv for iv in self.mis[q].I.items_by_l() if not iv.synthetic]
            assert {(iv.l, iv.id) for iv in members} == set(seq.keys), (
                q,
                members,
                seq.keys,
            )
            if deep:
                assert self.mis[q].verify_k_valid(), f"quadrant {q} lost validity"
        sizes = self.sizes()
        assert 2 * sizes[self.active] >= max(sizes.values()), (sizes, self.active)
