"""Dynamic independent set of intervals maintained by bounded local exchanges.

The maintained set I always satisfies two properties relative to the stored
set S: no non-member is strictly contained in a member, and no t <= k
members can be replaced by t+1 disjoint non-members.  Each update repairs
these properties with at most a constant number of windowed exchanges, found
by greedy extreme-endpoint queries.

The structure works against an abstract interval store for S, so the same
exchange machinery runs over an explicit store or over intervals derived on
the fly from square geometry.  In explicit mode, endpoint values are made
pairwise distinct at ingestion by nudging colliding endpoints into the
adjacent value-free gap (left endpoints move down, right endpoints move up),
which provably preserves the intersection graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from geomis import oracle
from geomis.errors import InternalInvariantError, MembershipError, OrderingError, PreconditionError
from geomis.geometry import Interval, RationalKey, key_between
from geomis.iqds import IntervalStore

DEBUG_CHECKS = False

_synth_ids = itertools.count(-2, -1)


@dataclass
class Delta:
    """Ordered add/remove change list for the reported independent set."""

    entries: list[tuple[str, int]] = field(default_factory=list)
    values: dict[int, Interval] = field(default_factory=dict)

    def add(self, iv: Interval) -> None:
        self.entries.append(("add", iv.id))
        self.values[iv.id] = iv

    def remove(self, iv: Interval) -> None:
        self.entries.append(("remove", iv.id))
        self.values[iv.id] = iv

    def extend(self, other: "Delta") -> None:
        self.entries.extend(other.entries)
        self.values.update(other.values)

    def net(self) -> "Delta":
        """Collapse to the net effect; internal round trips cancel."""
        score: dict[int, int] = {}
        for op, iid in self.entries:
            score[iid] = score.get(iid, 0) + (1 if op == "add" else -1)
        out = Delta()
        for iid, s in score.items():
            if s == 0:
                continue
            if s not in (-1, 1):
                raise InternalInvariantError(f"delta for id {iid} out of balance: {s}")
            out.entries.append(("add" if s == 1 else "remove", iid))
            if iid in self.values:
                out.values[iid] = self.values[iid]
        out.entries.sort(key=lambda e: (e[0] != "remove", e[1]))
        return out

    def to_json(self) -> dict:
        return {
            "add": [iid for op, iid in self.entries if op == "add"],
            "remove": [iid for op, iid in self.entries if op == "remove"],
        }

    def apply_to(self, ids: set) -> None:
        for op, iid in self.entries:
            if op == "add":
                ids.add(iid)
            else:
                ids.discard(iid)

    def __len__(self) -> int:
        return len(self.entries)


class IntervalMis:
    """Locally optimal independent set of a dynamic interval set.

    k is the exchange budget: larger k gives a tighter approximation at
    proportionally higher update cost.
    """

    def __init__(self, k: int = 5, seed: int = 0, s_view=None):
        if k < 1:
            raise PreconditionError("k must be >= 1")
        self.k = k
        self.explicit = s_view is None
        self.S = IntervalStore(seed=seed) if s_view is None else s_view
        self.I = IntervalStore(seed=seed + 1 if seed >= 0 else seed)
        self.by_id: dict[int, Interval] = {}

    # -- S bookkeeping (explicit mode owns storage and tie perturbation) ---

    def _perturbed(self, x: Interval) -> Interval:
        l, r = x.l, x.r
        if self._endpoint_taken(l):
            below = self._max_endpoint_below(l)
            l = key_between(below if below is not None else l - 1, l)
        if self._endpoint_taken(r):
            above = self.S.min_endpoint_above(r)
            r = key_between(r, above if above is not None else r + 1)
        return Interval(x.id, l, r, x.synthetic)

    def _endpoint_taken(self, v: RationalKey) -> bool:
        for item in (self.S.succ_with_l_geq(v), self.S.by_r.succ((v, float("-inf")))):
            if item is not None and v in (item.l, item.r):
                return True
        return False

    def _max_endpoint_below(self, v: RationalKey) -> Optional[RationalKey]:
        cands = []
        it = self.S.pred_with_l_lt(v)
        if it is not None:
            cands.append(it.l)
        it = self.S.by_r.pred((v, float("-inf")))
        if it is not None:
            cands.append(it.r)
        return max(cands) if cands else None

    def _s_add(self, x: Interval) -> Interval:
        if self.explicit:
            if x.id in self.by_id:
                raise MembershipError(f"interval id {x.id} already present")
            stored = self._perturbed(x)
            self.S.insert(stored)
            self.by_id[x.id] = stored
            return stored
        if x.synthetic:
            self.S.insert(x)
        return x

    def _s_remove(self, x: Interval) -> None:
        if self.explicit:
            if x.id not in self.by_id:
                raise MembershipError(f"interval id {x.id} not present")
            self.S.delete(self.by_id.pop(x.id))
        elif x.synthetic:
            self.S.delete(x)

    def resolve(self, iid: int) -> Optional[Interval]:
        return self.by_id.get(iid)

    # -- independent-set edits ---------------------------------------------

    def _i_add(self, iv: Interval, delta: Delta) -> None:
        self.I.insert(iv)
        delta.add(iv)

    def _i_remove(self, iv: Interval, delta: Delta) -> None:
        self.I.delete(iv)
        delta.remove(iv)

    def _apply_exchange(self, path, delta: Delta) -> None:
        removed, added = path
        for a in removed:
            self._i_remove(a, delta)
        for b in added:
            self._i_add(b, delta)

    # -- windowed exchange search ------------------------------------------

    def _s_leftmost_right(self, a, b) -> Optional[Interval]:
        y = self.S.leftmost_right(a, b)
        if DEBUG_CHECKS and y is not None:
            assert y.id not in self.I, f"window query returned a member: {y}"
        return y

    def _s_rightmost_left(self, a, b) -> Optional[Interval]:
        y = self.S.rightmost_left(a, b)
        if DEBUG_CHECKS and y is not None:
            assert y.id not in self.I, f"window query returned a member: {y}"
        return y

    def find_alternating_path(self, direction: str, budget: int, a, b):
        """Greedy windowed search for an improving exchange (A, B), |B|=|A|+1.

        Right: candidates start in the open window (a, b) and the chain walks
        right over successive members.  Left is the exact mirror.  Returns
        None when no exchange of the special greedy form exists.
        """
        if budget < 0:
            return None
        if direction == "right":
            return self._find_right(budget, a, b)
        if direction == "left":
            return self._find_left(budget, a, b)
        raise ValueError(f"unknown direction {direction!r}")

    def _find_right(self, budget: int, a, b):
        if budget < 0:
            return None
        removed: list[Interval] = []
        added: list[Interval] = []
        nxt = self.I.succ_with_l_geq(b) if b is not None else None
        while True:
            y = self._s_leftmost_right(a, b)
            if y is None:
                return None
            if nxt is None or y.r < nxt.l:
                added.append(y)
                return removed, added
            if y.r < nxt.r and len(removed) < budget:
                removed.append(nxt)
                added.append(y)
                a, b = y.r, nxt.r
                nxt = self.I.by_l.succ((nxt.l, nxt.id))
            else:
                return None

    def _find_left(self, budget: int, a, b):
        if budget < 0:
            return None
        removed: list[Interval] = []
        added: list[Interval] = []
        prev = self.I.pred_with_r_leq(a) if a is not None else None
        while True:
            y = self._s_rightmost_left(a, b)
            if y is None:
                return None
            if prev is None or y.l > prev.r:
                added.append(y)
                removed.reverse()
                added.reverse()
                return removed, added
            if y.l > prev.l and len(removed) < budget:
                removed.append(prev)
                added.append(y)
                a, b = prev.l, y.l
                prev = self.I.by_r.pred((prev.r, prev.id))
            else:
                return None

    def to_sibling(self, path):
        """Rebuild a left-search result so added intervals have minimal right
        endpoints, sweeping left to right; the removed set is unchanged."""
        removed, added = path
        new_added: list[Interval] = []
        if not removed:
            b = added[0]
            pred = self.I.pred_with_r_leq(b.l)
            succ = self.I.succ_with_l_geq(b.r)
            nb = self._s_leftmost_right(pred.r if pred else None, succ.l if succ else None)
        else:
            x = self.I.pred_with_l_lt(removed[0].l)
            nb = self._s_leftmost_right(x.r if x else None, removed[0].l)
        if nb is None:
            raise InternalInvariantError("sibling sweep found no replacement")
        new_added.append(nb)
        for i in range(len(removed)):
            nb = self._s_leftmost_right(new_added[-1].r, removed[i].r)
            if nb is None:
                raise InternalInvariantError("sibling sweep found no replacement")
            new_added.append(nb)
        return removed, new_added

    # -- public updates ------------------------------------------------------

    def insert(self, x: Interval) -> Delta:
        delta = Delta()
        stored = self._s_add(x)
        a_l = self.I.cover(stored.l)
        a_r = self.I.cover(stored.r)
        if a_l is None and a_r is None:
            inner = self.I.succ_with_l_geq(stored.l)
            if inner is None or inner.l > stored.r:
                self._i_add(stored, delta)
            # otherwise the new interval swallows members; nothing to do
        elif a_l is not None and a_r is not None:
            if a_l.id == a_r.id:
                self._i_remove(a_l, delta)
                self._i_add(stored, delta)
                right = self._find_right(self.k, stored.r, a_l.r)
                if right is not None:
                    self._apply_exchange(right, delta)
                left = self._find_left(self.k, a_l.l, stored.l)
                if left is not None:
                    self._apply_exchange(left, delta)
            else:
                nxt = self.I.by_l.succ((a_l.l, a_l.id))
                if nxt is not None and nxt.id == a_r.id:
                    right = self._find_right(self.k - 2, stored.r, a_r.r)
                    if right is not None:
                        left = self._find_left(self.k - 2 - len(right[0]), a_l.l, stored.l)
                        if left is not None:
                            removed = left[0] + [a_l, a_r] + right[0]
                            added = left[1] + [stored] + right[1]
                            self._apply_exchange((removed, added), delta)
                # endpoints in non-consecutive members: the new interval
                # swallows members and stays out
        elif a_r is not None:
            first = self.I.succ_with_l_geq(stored.l)
            if first is not None and first.id == a_r.id:
                right = self._find_right(self.k - 1, stored.r, a_r.r)
                if right is not None:
                    self._apply_exchange((right[0] + [a_r], right[1] + [stored]), delta)
            # members swallowed between l(x) and a_r: stay out (see case 2b)
        else:
            last = self.I.pred_with_r_leq(stored.r)
            if last is not None and last.id == a_l.id:
                left = self._find_left(self.k - 1, a_l.l, stored.l)
                if left is not None:
                    self._apply_exchange((left[0] + [a_l], left[1] + [stored]), delta)
        return delta.net()

    def delete(self, x: Interval) -> Delta:
        delta = Delta()
        stored = self.by_id.get(x.id, x) if self.explicit else x
        if stored.id not in self.I:
            self._s_remove(stored)
            return delta.net()
        a_l = self.I.pred_with_l_lt(stored.l)
        a_r = self.I.by_l.succ((stored.l, stored.id))
        self._s_remove(stored)
        self._i_remove(stored, delta)
        wa = a_l.r if a_l is not None else None
        wb = a_r.l if a_r is not None else None
        right = self._find_right(self.k, wa, wb)
        left = self._find_left(self.k, wa, wb)
        if left is not None:
            left = self.to_sibling(left)
        if left is not None and right is not None:
            if left[1][-1].r < right[1][0].l:
                self._apply_exchange(right, delta)
                self._apply_exchange(left, delta)
            else:
                self._apply_exchange(left, delta)
        elif left is not None or right is not None:
            self._apply_exchange(left if left is not None else right, delta)
        else:
            y = self._s_leftmost_right(wa, stored.l)
            if y is not None and (wb is None or y.r < wb):
                self._i_add(y, delta)
            else:
                # scan the k gaps to the right for a path through an
                # interval that spans the vacated slot
                prev_r, cur = stored.r, a_r
                for _ in range(self.k):
                    hi = cur.l if cur is not None else None
                    path = self._find_left(self.k, prev_r, hi)
                    if path is not None:
                        self._apply_exchange(path, delta)
                        break
                    if cur is None:
                        break
                    prev_r, cur = cur.r, self.I.by_l.succ((cur.l, cur.id))
        self._repair_gap(wa, wb, delta)
        return delta.net()

    def _repair_gap(self, lo, hi, delta: Delta) -> None:
        """Sweep the vacated zone in both directions, applying any exchange
        the single-pass deletion handling may have left behind.

        One pass is not always enough: when both side paths exist but cannot
        be merged, applying one can still leave room for a further exchange
        in the residual gap, on either side.  Every successful round nets one
        new member, so the alternation terminates.
        """
        rounds = 0
        while True:
            rounds += 1
            if rounds > 10_000:
                raise InternalInvariantError("gap repair did not converge")
            if not (self._sweep_right(lo, hi, delta) or self._sweep_left(lo, hi, delta)):
                return

    def _sweep_right(self, lo, hi, delta: Delta) -> bool:
        scan, changed = lo, False
        while True:
            if scan is not None:
                covering = self.I.cover(scan)
                if covering is not None and covering.r > scan:
                    scan = covering.r
            succ = self.I.succ_with_l_geq(scan) if scan is not None else self.I.min_by_l()
            ub = succ.l if succ is not None else None
            path = self._find_right(self.k, scan, ub)
            if path is not None:
                self._apply_exchange(path, delta)
                scan = path[1][-1].r
                changed = True
                continue
            if succ is not None and hi is not None and succ.l < hi:
                scan = succ.r
                continue
            return changed

    def _sweep_left(self, lo, hi, delta: Delta) -> bool:
        scan, changed = hi, False
        while True:
            if scan is not None:
                covering = self.I.cover(scan)
                if covering is not None and covering.l < scan:
                    scan = covering.l
            pred = self.I.pred_with_r_leq(scan) if scan is not None else self.I.max_by_l()
            lb = pred.r if pred is not None else None
            path = self._find_left(self.k, lb, scan)
            if path is not None:
                self._apply_exchange(path, delta)
                scan = path[1][0].l
                changed = True
                continue
            if pred is not None and lo is not None and pred.r > lo:
                scan = pred.l
                continue
            return changed

    # -- structural operations (explicit store only) -------------------------

    def _fresh_sentinel(self, t: RationalKey, ne: Optional[RationalKey]) -> Interval:
        hi = ne if ne is not None else t + 1
        m1 = key_between(t, hi)
        m2 = key_between(m1, hi)
        return Interval(next(_synth_ids), m1, m2, synthetic=True)

    def merge(self, other: "IntervalMis", t: RationalKey) -> Delta:
        """Absorb `other` (all left endpoints beyond t) into this structure."""
        if not (self.explicit and other.explicit):
            raise PreconditionError("structural merge is for explicit stores")
        if self.k != other.k:
            raise OrderingError("merge requires equal exchange budgets")
        mx = self.S.max_by_l()
        mn = other.S.min_by_l()
        if (mx is not None and mx.l > t) or (mn is not None and mn.l <= t):
            raise OrderingError("merge boundary does not separate left endpoints")
        delta = Delta()
        cands = [v for v in (self.S.min_endpoint_above(t), mn.l if mn else None) if v is not None]
        ne = min(cands) if cands else None
        b = self._fresh_sentinel(t, ne)
        delta.extend(self.insert(b))
        if DEBUG_CHECKS:
            assert b.id in self.I
        bound = b.r
        self.S.merge(other.S, bound)
        self.I.merge(other.I, bound)
        self.by_id.update(other.by_id)
        other.by_id = {}
        delta.extend(self.delete(b))
        out = delta.net()
        if DEBUG_CHECKS:
            assert all(v >= 0 for _, v in out.entries)
        return out

    def split(self, t: RationalKey) -> tuple[Delta, "IntervalMis"]:
        """Split off intervals with left endpoint beyond t into a new structure."""
        if not self.explicit:
            raise PreconditionError("structural split is for explicit stores")
        delta = Delta()
        ne = self.S.min_endpoint_above(t)
        b = self._fresh_sentinel(t, ne)
        delta.extend(self.insert(b))
        if DEBUG_CHECKS:
            assert b.id in self.I
        bound = b.r
        s1, s2 = self.S.split(bound)
        i1, i2 = self.I.split(bound)
        right = IntervalMis(k=self.k)
        right.S, right.I = s2, i2
        self.S, self.I = s1, i1
        for iv in s2.items_by_l():
            right.by_id[iv.id] = self.by_id.pop(iv.id)
        delta.extend(self.delete(b))
        return delta.net(), right

    def ensure_max_left_member(self, delta: Delta) -> None:
        """Make the interval with the greatest left endpoint a member."""
        tau = self.S.max_by_l()
        if tau is None or tau.id in self.I:
            return
        x = self.I.max_by_l()
        if x is not None:
            self._i_remove(x, delta)
        self._i_add(tau, delta)
        pred = self.I.pred_with_l_lt(tau.l)
        path = self._find_left(self.k, pred.r if pred else None, tau.l)
        if path is not None:
            path = self.to_sibling(path)
            self._apply_exchange(path, delta)

    def clip(self, t: RationalKey) -> Delta:
        """Shrink every right endpoint beyond t; members change only via the
        preparatory substitution that pulls the rightmost-starting interval in."""
        mx = self.S.max_by_l()
        if mx is not None and mx.l >= t:
            raise PreconditionError("clip point must exceed every left endpoint")
        delta = Delta()
        if mx is None:
            return delta.net()
        self.ensure_max_left_member(delta)
        crossers = []
        while True:
            item = self.S.by_r.succ((t, float("inf")))
            if item is None:
                break
            crossers.append(item)
            self.S.delete(item)
        crossers.sort(key=lambda iv: (iv.r, iv.id))
        base = self._max_endpoint_below(t)
        if base is None or (mx is not None and base < mx.l):
            base = mx.l
        cur = base
        for old in crossers:
            cur = key_between(cur, t)
            new = Interval(old.id, old.l, cur, old.synthetic)
            self.S.insert(new)
            if self.explicit:
                self.by_id[old.id] = new
            if old.id in self.I:
                self.I.delete(old)
                self.I.insert(new)
        return delta.net()

    def extend(self, old: Interval, new: Interval) -> None:
        """Replace a non-member by a proper superset; members are unaffected."""
        stored = self.by_id.get(old.id) if self.explicit else old
        if stored is None:
            raise MembershipError(f"interval id {old.id} not present")
        if stored.id in self.I:
            raise PreconditionError("extend applies only to non-members")
        lo, hi = min(new.l, stored.l), max(new.r, stored.r)
        if (lo, hi) == (stored.l, stored.r):
            raise PreconditionError("extension must properly grow the interval")
        if new.id != old.id:
            raise PreconditionError("extension must keep the id")
        self._s_remove(stored)
        self._s_add(Interval(old.id, lo, hi, stored.synthetic))

    # -- verification ---------------------------------------------------------

    def members(self) -> list[Interval]:
        return self.I.items_by_l()

    def verify_k_valid(self) -> bool:
        """Test-scale oracle check of both maintained properties."""
        return oracle.check_k_valid(self.S.items_by_l(), self.I.items_by_l(), self.k)
