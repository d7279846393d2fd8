"""Ordered interval container with extreme-endpoint window queries.

Two mirrored treap views index the same interval set: one keyed by left
endpoint carrying a subtree-minimum of (r, id), one keyed by right endpoint
carrying a subtree-maximum of (l, -id).  Windows are open on both sides and
ties break by id, so every query is deterministic.

Split/merge cut both views; the right-endpoint view cannot always be cut at
a left-endpoint threshold in one piece, so intervals crossing the boundary
are re-homed one by one (O(log n) each).
"""

from __future__ import annotations

import math
import random
from typing import Callable, Iterator, Optional

from geomis.errors import MembershipError, OrderingError
from geomis.geometry import Interval, RationalKey

_INF = math.inf


class _Node:
    __slots__ = ("key", "sec", "item", "prio", "left", "right", "size", "mn", "mx")

    def __init__(self, key, sec, item, prio):
        self.key = key
        self.sec = sec
        self.item = item
        self.prio = prio
        self.left = None
        self.right = None
        self.size = 1
        self.mn = (sec, item)
        self.mx = (sec, item)


def _pull(n: _Node) -> None:
    size, mn, mx = 1, (n.sec, n.item), (n.sec, n.item)
    for c in (n.left, n.right):
        if c is not None:
            size += c.size
            if c.mn[0] < mn[0]:
                mn = c.mn
            if c.mx[0] > mx[0]:
                mx = c.mx
    n.size, n.mn, n.mx = size, mn, mx


def _join(a: Optional[_Node], b: Optional[_Node]) -> Optional[_Node]:
    if a is None or b is None:
        return a if b is None else b
    if a.prio > b.prio:
        a.right = _join(a.right, b)
        _pull(a)
        return a
    b.left = _join(a, b.left)
    _pull(b)
    return b


def _split(n: Optional[_Node], key) -> tuple[Optional[_Node], Optional[_Node]]:
    """Split into (keys <= key, keys > key)."""
    if n is None:
        return None, None
    if n.key <= key:
        l, r = _split(n.right, key)
        n.right = l
        _pull(n)
        return n, r
    l, r = _split(n.left, key)
    n.left = r
    _pull(n)
    return l, n


class _View:
    """One treap over (key(iv), sec(iv)) pairs."""

    def __init__(self, key_fn: Callable, sec_fn: Callable, rng: random.Random):
        self.key_fn = key_fn
        self.sec_fn = sec_fn
        self.rng = rng
        self.root: Optional[_Node] = None

    def insert(self, iv: Interval) -> None:
        node = _Node(self.key_fn(iv), self.sec_fn(iv), iv, self.rng.random())
        l, r = _split(self.root, node.key)
        self.root = _join(_join(l, node), r)

    def delete(self, iv: Interval) -> bool:
        key = self.key_fn(iv)

        def rec(n):
            if n is None:
                return None, False
            if key < n.key:
                n.left, ok = rec(n.left)
            elif n.key < key:
                n.right, ok = rec(n.right)
            else:
                return _join(n.left, n.right), True
            _pull(n)
            return n, ok

        self.root, ok = rec(self.root)
        return ok

    def find(self, iv: Interval) -> Optional[_Node]:
        key, n = self.key_fn(iv), self.root
        while n is not None:
            if key < n.key:
                n = n.left
            elif n.key < key:
                n = n.right
            else:
                return n
        return None

    # -- window aggregates; lo_key/hi_key are exclusive tuple bounds --

    def best_in_window(self, lo_key, hi_key, want_min: bool) -> Optional[Interval]:
        best = self._best(self.root, lo_key, hi_key, want_min)
        return best[1] if best is not None else None

    def _best(self, n, lo_key, hi_key, want_min):
        if n is None:
            return None
        if lo_key is None and hi_key is None:
            return n.mn if want_min else n.mx
        if not (lo_key is None or n.key > lo_key):
            return self._best(n.right, lo_key, hi_key, want_min)
        if not (hi_key is None or n.key < hi_key):
            return self._best(n.left, lo_key, hi_key, want_min)
        best = (n.sec, n.item)
        for cand in (
            self._best(n.left, lo_key, None, want_min),
            self._best(n.right, None, hi_key, want_min),
        ):
            if cand is None:
                continue
            if (want_min and cand[0] < best[0]) or (not want_min and cand[0] > best[0]):
                best = cand
        return best

    def succ(self, key) -> Optional[Interval]:
        n, best = self.root, None
        while n is not None:
            if n.key > key:
                best, n = n.item, n.left
            else:
                n = n.right
        return best

    def pred(self, key) -> Optional[Interval]:
        n, best = self.root, None
        while n is not None:
            if n.key < key:
                best, n = n.item, n.right
            else:
                n = n.left
        return best

    def min_item(self) -> Optional[Interval]:
        n = self.root
        if n is None:
            return None
        while n.left is not None:
            n = n.left
        return n.item

    def max_item(self) -> Optional[Interval]:
        n = self.root
        if n is None:
            return None
        while n.right is not None:
            n = n.right
        return n.item

    def items(self) -> Iterator[Interval]:
        stack, n = [], self.root
        while stack or n is not None:
            while n is not None:
                stack.append(n)
                n = n.left
            n = stack.pop()
            yield n.item
            n = n.right

    def pop_with_sec0_leq(self, bound) -> Optional[Interval]:
        """Remove and return some interval whose sec[0] <= bound."""
        n = self.root
        if n is None or n.mn[0][0] > bound:
            return None
        while True:
            if n.sec[0] <= bound:
                item = n.item
                break
            if n.left is not None and n.left.mn[0][0] <= bound:
                n = n.left
            else:
                n = n.right
        self.delete(item)
        return item

    def height(self) -> int:
        def rec(n):
            return 0 if n is None else 1 + max(rec(n.left), rec(n.right))

        return rec(self.root)

    @property
    def size(self) -> int:
        return self.root.size if self.root is not None else 0


def _lkey(iv: Interval):
    return (iv.l, iv.id)


def _lsec(iv: Interval):
    return (iv.r, iv.id)


def _rkey(iv: Interval):
    return (iv.r, iv.id)


def _rsec(iv: Interval):
    return (iv.l, -iv.id)


class IntervalStore:
    """Interval multiset with O(log n) updates, window queries, split, merge."""

    def __init__(self, seed: int = 0, _rng: Optional[random.Random] = None):
        self.rng = _rng if _rng is not None else random.Random(seed)
        self.by_l = _View(_lkey, _lsec, self.rng)
        self.by_r = _View(_rkey, _rsec, self.rng)
        self.by_id: dict[int, Interval] = {}

    def __len__(self) -> int:
        return len(self.by_id)

    def __contains__(self, iid: int) -> bool:
        return iid in self.by_id

    def get(self, iid: int) -> Optional[Interval]:
        return self.by_id.get(iid)

    def insert(self, iv: Interval) -> None:
        if iv.id in self.by_id:
            raise MembershipError(f"interval id {iv.id} already present")
        self.by_id[iv.id] = iv
        self.by_l.insert(iv)
        self.by_r.insert(iv)

    def delete(self, iv: Interval) -> None:
        stored = self.by_id.get(iv.id)
        if stored is None:
            raise MembershipError(f"interval id {iv.id} not present")
        del self.by_id[iv.id]
        self.by_l.delete(stored)
        self.by_r.delete(stored)

    def update(self, kind: str, iv: Interval) -> None:
        if kind == "insert":
            self.insert(iv)
        elif kind == "delete":
            self.delete(iv)
        else:
            raise ValueError(f"unknown update kind {kind!r}")

    # -- queries ---------------------------------------------------------

    def leftmost_right(self, a: Optional[RationalKey], b: Optional[RationalKey]) -> Optional[Interval]:
        """Among intervals with l in open (a, b), the one minimizing (r, id)."""
        lo = None if a is None else (a, _INF)
        hi = None if b is None else (b, -_INF)
        return self.by_l.best_in_window(lo, hi, want_min=True)

    def rightmost_left(self, a: Optional[RationalKey], b: Optional[RationalKey]) -> Optional[Interval]:
        """Among intervals with r in open (a, b), the one maximizing l (ties: min id)."""
        lo = None if a is None else (a, _INF)
        hi = None if b is None else (b, -_INF)
        return self.by_r.best_in_window(lo, hi, want_min=False)

    def report_extreme(self, direction: str, a, b) -> Optional[Interval]:
        if direction == "leftmost-right":
            return self.leftmost_right(a, b)
        if direction == "rightmost-left":
            return self.rightmost_left(a, b)
        raise ValueError(f"unknown direction {direction!r}")

    def succ_with_l_geq(self, x: RationalKey) -> Optional[Interval]:
        """Interval with the least left endpoint >= x (ties by id)."""
        return self.by_l.succ((x, -_INF))

    def pred_with_l_lt(self, x: RationalKey) -> Optional[Interval]:
        """Interval with the greatest left endpoint strictly below x."""
        return self.by_l.pred((x, -_INF))

    def pred_with_r_leq(self, x: RationalKey) -> Optional[Interval]:
        """Interval with the greatest right endpoint <= x."""
        return self.by_r.pred((x, _INF))

    def cover(self, p: RationalKey) -> Optional[Interval]:
        """For disjoint contents: the interval containing point p, if any."""
        cand = self.by_l.pred((p, _INF))
        if cand is not None and cand.r >= p:
            return cand
        return None

    def min_by_l(self) -> Optional[Interval]:
        return self.by_l.min_item()

    def max_by_l(self) -> Optional[Interval]:
        return self.by_l.max_item()

    def min_endpoint_above(self, t: RationalKey) -> Optional[RationalKey]:
        """Least endpoint value (either side) strictly greater than t."""
        lo = self.by_l.succ((t, _INF))
        hi = self.by_r.succ((t, _INF))
        cands = [iv.l for iv in (lo,) if iv is not None] + [iv.r for iv in (hi,) if iv is not None]
        return min(cands) if cands else None

    def items_by_l(self) -> list[Interval]:
        return list(self.by_l.items())

    # -- split / merge ---------------------------------------------------

    def split(self, t: RationalKey) -> tuple["IntervalStore", "IntervalStore"]:
        """Consume self into ({l <= t}, {l > t})."""
        left = IntervalStore(_rng=self.rng)
        right = IntervalStore(_rng=self.rng)
        left.by_l.root, right.by_l.root = _split(self.by_l.root, (t, _INF))
        low_r, high_r = _split(self.by_r.root, (t, _INF))
        left.by_r.root = low_r
        right.by_r.root = high_r
        while True:
            crosser = right.by_r.pop_with_sec0_leq(t)
            if crosser is None:
                break
            left.by_r.insert(crosser)
        for st in (left, right):
            for iv in st.by_r.items():
                st.by_id[iv.id] = iv
        self.by_l.root = self.by_r.root = None
        self.by_id = {}
        return left, right

    def merge(self, other: "IntervalStore", t: RationalKey) -> "IntervalStore":
        """Consume self and other (all l here <= t < all l there) into self."""
        mx, mn = self.max_by_l(), other.min_by_l()
        if (mx is not None and mx.l > t) or (mn is not None and mn.l <= t):
            raise OrderingError(f"merge at {t} violates left-endpoint separation")
        self.by_l.root = _join(self.by_l.root, other.by_l.root)
        low_r, cross_r = _split(self.by_r.root, (t, _INF))
        self.by_r.root = _join(low_r, other.by_r.root)
        crossers = []
        stack = [cross_r]
        while stack:
            n = stack.pop()
            if n is not None:
                crossers.append(n.item)
                stack.extend((n.left, n.right))
        for iv in crossers:
            self.by_r.insert(iv)
        self.by_id.update(other.by_id)
        other.by_l.root = other.by_r.root = None
        other.by_id = {}
        return self

    # -- diagnostics -----------------------------------------------------

    def height_ok(self) -> bool:
        n = len(self)
        bound = 4 * math.log2(n + 2)
        return self.by_l.height() <= bound and self.by_r.height() <= bound

    def check_consistent(self) -> None:
        left = sorted(self.by_l.items(), key=lambda iv: iv.id)
        right = sorted(self.by_r.items(), key=lambda iv: iv.id)
        assert left == right == sorted(self.by_id.values(), key=lambda iv: iv.id)
