"""Global store of squares as 4-D points with box searches and box marking.

Each stored square is one point (left, bottom, right, top) in doubled grid
units, carrying a quadrant mark.  Marking a box assigns lazily: a subtree
fully inside the box gets a note that overrides everything below it, pushed
down whenever the node is touched, so a square's effective mark is the note
of its highest noted ancestor, else its stored mark.  Subtree summaries
(bitmask of effective marks present, minimum live id per mark) are kept
consistent with the subtree's own note eagerly, so searches prune without
touching lazy state.

The tree is a kd-tree on the four coordinates with scapegoat rebuilding and
tombstoned deletes; a point lives in exactly one node, which is what makes
lazy mark assignment sound.
"""

from __future__ import annotations

import math
from typing import Optional

from geomis.errors import MembershipError
from geomis.geometry import QuadrantLabel, QuantizedSquare

MARK_NONE = 0
MARK_OF = {None: MARK_NONE, QuadrantLabel.I: 1, QuadrantLabel.II: 2, QuadrantLabel.III: 3, QuadrantLabel.IV: 4}
LABEL_OF = {v: k for k, v in MARK_OF.items()}
NO_ID = (1 << 63) - 1

ALPHA = 0.65


DIMS = 5  # left, bottom, right, top (doubled grid units), then id

ID_LO = -(1 << 63)
ID_HI = (1 << 63) - 1


def point_of(q: QuantizedSquare) -> tuple[int, int, int, int, int]:
    return (2 * q.x1, 2 * q.y1, 2 * q.x2, 2 * q.y2, q.id)


class _Node:
    __slots__ = (
        "point", "sid", "mark", "note", "dead", "left", "right",
        "size", "live", "mask", "min_id", "max_id", "lo", "hi",
    )

    def __init__(self, point, sid, mark):
        self.point = point
        self.sid = sid
        self.mark = mark
        self.note: Optional[int] = None
        self.dead = False
        self.left: Optional[_Node] = None
        self.right: Optional[_Node] = None
        self.size = 1
        self.live = 1
        self.mask = 1 << mark
        self.min_id = [NO_ID] * 5
        self.min_id[mark] = sid
        self.max_id = [-NO_ID] * 5
        self.max_id[mark] = sid
        self.lo = point
        self.hi = point


def _set_note(n: _Node, m: int) -> None:
    live_min = min(n.min_id)
    live_max = max(n.max_id)
    n.note = m
    n.mask = (1 << m) if n.live else 0
    n.min_id = [NO_ID] * 5
    n.max_id = [-NO_ID] * 5
    if n.live:
        n.min_id[m] = live_min
        n.max_id[m] = live_max


class MarkedSquareStore:
    """Insert/delete squares with marks; box-mark and box-search them."""

    def __init__(self):
        self.root: Optional[_Node] = None
        self.dead_count = 0
        self.visits = 0  # nodes touched by the most recent operation

    def __len__(self) -> int:
        return self.root.live if self.root is not None else 0

    # -- lazy note plumbing -------------------------------------------------

    def _push(self, n: _Node) -> None:
        if n.note is None:
            return
        m = n.note
        if not n.dead:
            n.mark = m
        for c in (n.left, n.right):
            if c is not None:
                _set_note(c, m)
        n.note = None

    def _pull(self, n: _Node) -> None:
        size, live = 1, 0 if n.dead else 1
        mask = 0 if n.dead else (1 << n.mark)
        min_id = [NO_ID] * 5
        max_id = [-NO_ID] * 5
        if not n.dead:
            min_id[n.mark] = n.sid
            max_id[n.mark] = n.sid
        lo = list(n.point)
        hi = list(n.point)
        for c in (n.left, n.right):
            if c is None:
                continue
            size += c.size
            live += c.live
            mask |= c.mask
            for m in range(5):
                if c.min_id[m] < min_id[m]:
                    min_id[m] = c.min_id[m]
                if c.max_id[m] > max_id[m]:
                    max_id[m] = c.max_id[m]
            for d in range(DIMS):
                if c.lo[d] < lo[d]:
                    lo[d] = c.lo[d]
                if c.hi[d] > hi[d]:
                    hi[d] = c.hi[d]
        n.size, n.live, n.mask, n.min_id, n.max_id = size, live, mask, min_id, max_id
        n.lo, n.hi = tuple(lo), tuple(hi)

    def _collect(self, n: Optional[_Node], override: Optional[int], out: list) -> None:
        if n is None:
            return
        eff = override if override is not None else n.note
        if not n.dead:
            out.append((n.point, n.sid, eff if eff is not None else n.mark))
        self._collect(n.left, eff, out)
        self._collect(n.right, eff, out)

    def _build(self, items: list, dim: int) -> Optional[_Node]:
        if not items:
            return None
        items.sort(key=lambda it: (it[0][dim], it[0], it[1]))
        mid = len(items) // 2
        point, sid, mark = items[mid]
        n = _Node(point, sid, mark)
        n.left = self._build(items[:mid], (dim + 1) % DIMS)
        n.right = self._build(items[mid + 1 :], (dim + 1) % DIMS)
        self._pull(n)
        return n

    def _rebuild(self, n: _Node, dim: int) -> Optional[_Node]:
        out: list = []
        self._collect(n, None, out)
        self.dead_count -= n.size - n.live
        return self._build(out, dim)

    # -- operations -----------------------------------------------------------

    def insert(self, q: QuantizedSquare, mark: Optional[QuadrantLabel]) -> None:
        self.visits = 1
        m = MARK_OF[mark]
        point = point_of(q)
        if self.root is None:
            self.root = _Node(point, q.id, m)
            return
        path: list[tuple[_Node, int]] = []
        n, dim = self.root, 0
        while True:
            self.visits += 1
            self._push(n)
            path.append((n, dim))
            if (point, q.id) == (n.point, n.sid):
                if not n.dead:
                    raise MembershipError(f"square id {q.id} already stored")
                n.dead = False
                n.mark = m
                self.dead_count -= 1
                break
            go_left = (point[dim], point, q.id) < (n.point[dim], n.point, n.sid)
            nxt = n.left if go_left else n.right
            if nxt is None:
                child = _Node(point, q.id, m)
                if go_left:
                    n.left = child
                else:
                    n.right = child
                break
            n, dim = nxt, (dim + 1) % DIMS
        for pn, _ in reversed(path):
            self._pull(pn)
        limit = math.log(max(self.root.size, 2), 1 / ALPHA) + 2
        if len(path) + 1 > limit:
            self._rebalance(path)

    def _rebalance(self, path: list[tuple[_Node, int]]) -> None:
        for i in range(len(path) - 1, -1, -1):
            n, dim = path[i]
            for c in (n.left, n.right):
                if c is not None and c.size > ALPHA * n.size:
                    rebuilt = self._rebuild(n, dim)
                    if i == 0:
                        self.root = rebuilt
                    else:
                        parent = path[i - 1][0]
                        if parent.left is n:
                            parent.left = rebuilt
                        else:
                            parent.right = rebuilt
                    for pn, _ in reversed(path[:i]):
                        self._pull(pn)
                    return

    def delete(self, q: QuantizedSquare) -> None:
        self.visits = 0
        point = point_of(q)
        path: list[_Node] = []
        n, dim = self.root, 0
        while n is not None:
            self.visits += 1
            self._push(n)
            path.append(n)
            if (point, q.id) == (n.point, n.sid):
                if n.dead:
                    break
                n.dead = True
                self.dead_count += 1
                for pn in reversed(path):
                    self._pull(pn)
                if self.root is not None and self.dead_count > max(4, self.root.live):
                    self.root = self._rebuild(self.root, 0)
                return
            go_left = (point[dim], point, q.id) < (n.point[dim], n.point, n.sid)
            n = n.left if go_left else n.right
            dim = (dim + 1) % DIMS
        raise MembershipError(f"square id {q.id} not stored")

    def update(self, kind: str, q: QuantizedSquare, mark: Optional[QuadrantLabel] = None) -> None:
        if kind == "insert":
            self.insert(q, mark)
        elif kind == "delete":
            self.delete(q)
        else:
            raise ValueError(f"unknown update kind {kind!r}")

    def mark_box(self, lo: tuple, hi: tuple, mark: Optional[QuadrantLabel]) -> None:
        """Assign `mark` to every stored square whose point is inside the box."""
        self.visits = 0
        m = MARK_OF[mark]

        def rec(n: Optional[_Node]):
            if n is None:
                return
            self.visits += 1
            if any(n.hi[d] < lo[d] or hi[d] < n.lo[d] for d in range(DIMS)):
                return
            if all(lo[d] <= n.lo[d] and n.hi[d] <= hi[d] for d in range(DIMS)):
                _set_note(n, m)
                return
            self._push(n)
            if not n.dead and all(lo[d] <= n.point[d] <= hi[d] for d in range(DIMS)):
                n.mark = m
            rec(n.left)
            rec(n.right)
            self._pull(n)

        rec(self.root)

    def search_box(
        self, lo: tuple, hi: tuple, mark: Optional[QuadrantLabel], prefer: str = "min"
    ) -> Optional[int]:
        """Extreme (minimum or maximum) id of a stored square with this
        effective mark inside the box."""
        self.visits = 0
        m = MARK_OF[mark]
        want_min = prefer == "min"
        best = NO_ID if want_min else -NO_ID

        def better(v) -> bool:
            return v < best if want_min else v > best

        def rec(n: Optional[_Node]):
            nonlocal best
            if n is None:
                return
            self.visits += 1
            if not (n.mask >> m) & 1 or not better(n.min_id[m] if want_min else n.max_id[m]):
                return
            if any(n.hi[d] < lo[d] or hi[d] < n.lo[d] for d in range(DIMS)):
                return
            if all(lo[d] <= n.lo[d] and n.hi[d] <= hi[d] for d in range(DIMS)):
                best = n.min_id[m] if want_min else n.max_id[m]
                return
            self._push(n)
            if (
                not n.dead
                and n.mark == m
                and better(n.sid)
                and all(lo[d] <= n.point[d] <= hi[d] for d in range(DIMS))
            ):
                best = n.sid
            rec(n.left)
            rec(n.right)

        rec(self.root)
        return None if best in (NO_ID, -NO_ID) else best

    # -- spec-level wrappers over square pairs ---------------------------------

    @staticmethod
    def box_of(s1: QuantizedSquare, s2: QuantizedSquare) -> tuple[tuple, tuple]:
        lo, hi = point_of(s1), point_of(s2)
        return lo[:4] + (ID_LO,), hi[:4] + (ID_HI,)

    def range_mark(self, s1: QuantizedSquare, s2: QuantizedSquare, mark) -> None:
        lo, hi = self.box_of(s1, s2)
        self.mark_box(lo, hi, mark)

    def range_search(self, s1: QuantizedSquare, s2: QuantizedSquare, mark) -> Optional[int]:
        lo, hi = self.box_of(s1, s2)
        return self.search_box(lo, hi, mark)

    # -- diagnostics ------------------------------------------------------------

    def dump_marks(self) -> dict[int, Optional[QuadrantLabel]]:
        out: list = []
        self._collect(self.root, None, out)
        return {sid: LABEL_OF[mark] for _, sid, mark in out}

    def effective_mark(self, q: QuantizedSquare) -> Optional[QuadrantLabel]:
        point = point_of(q)
        n, dim, override = self.root, 0, None
        while n is not None:
            if override is None and n.note is not None:
                override = n.note
            if (point, q.id) == (n.point, n.sid) and not n.dead:
                return LABEL_OF[override if override is not None else n.mark]
            go_left = (point[dim], point, q.id) < (n.point[dim], n.point, n.sid)
            n = n.left if go_left else n.right
            dim = (dim + 1) % DIMS
        raise MembershipError(f"square id {q.id} not stored")
