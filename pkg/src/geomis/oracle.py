"""Reference implementations used by differential tests and checkers.

Nothing here shares code with the maintained structures.  Everything favors
obviousness over speed, except `is_k_maximal`, which needs to run after
every operation of a long fuzz sequence and therefore uses a small sweep DP
(validated against plain enumeration in the test suite).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

from geomis.errors import PreconditionError
from geomis.geometry import Interval, Square


@dataclass
class OracleReport:
    opt_value: int
    witness: list
    checked_property: str
    ok: bool


# --------------------------------------------------------------------------
# intervals


def exact_intervals(items: Iterable[Interval]) -> tuple[int, list[Interval]]:
    """Exact interval MIS: sweep picking the earliest right endpoint."""
    chosen: list[Interval] = []
    frontier = None
    for iv in sorted(items, key=lambda iv: (iv.r, iv.l, iv.id)):
        if frontier is None or iv.l > frontier:
            chosen.append(iv)
            frontier = iv.r
    return len(chosen), chosen


def exhaustive_intervals(items: Sequence[Interval]) -> int:
    """Maximum independent set size by full subset enumeration (n <= ~14)."""
    n = len(items)
    if n > 16:
        raise PreconditionError("exhaustive_intervals limited to n <= 16")
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if items[i].intersects(items[j]):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    best = 0
    for mask in range(1 << n):
        m = mask
        ok = True
        while m:
            i = (m & -m).bit_length() - 1
            if adj[i] & mask:
                ok = False
                break
            m &= m - 1
        if ok:
            best = max(best, mask.bit_count())
    return best


def _hit_range(iv: Interval, ind_ls, ind_rs) -> tuple[int, int]:
    """Index range [lo, hi] of sorted disjoint members intersecting iv (hi < lo: none)."""
    lo = bisect_left(ind_rs, iv.l)
    hi = bisect_right(ind_ls, iv.r) - 1
    return lo, hi


def no_containment_ok(all_items: Sequence[Interval], ind_items: Sequence[Interval]) -> bool:
    """True iff no non-member is strictly inside a member."""
    ind_ids = {iv.id for iv in ind_items}
    outs = sorted((iv for iv in all_items if iv.id not in ind_ids), key=lambda iv: iv.l)
    ls = [iv.l for iv in outs]
    if not outs:
        return True
    # sparse table over minimum r of the non-members
    rs = [iv.r for iv in outs]
    n = len(rs)
    table = [rs]
    k = 1
    while (1 << k) <= n:
        prev = table[-1]
        table.append([min(prev[i], prev[i + (1 << (k - 1))]) for i in range(n - (1 << k) + 1)])
        k += 1

    def range_min(a: int, b: int):  # inclusive, a <= b
        span = b - a + 1
        k = span.bit_length() - 1
        return min(table[k][a], table[k][b - (1 << k) + 1])

    for member in ind_items:
        a = bisect_right(ls, member.l)
        b = bisect_left(ls, member.r) - 1
        if a <= b and range_min(a, b) < member.r:
            return False
    return True


def is_k_maximal(all_items: Sequence[Interval], ind_items: Sequence[Interval], k: int) -> bool:
    """True iff no t<=k members can be swapped for t+1 disjoint non-members.

    An improving swap exists iff some disjoint set B of non-members hits
    fewer than |B| members, for |B| <= k+1 (removing exactly the hit members
    frees room for B).  Because members are disjoint and sorted, the members
    hit by each candidate form an index range, and ranges of consecutive
    chosen candidates can share at most their boundary member, so a sweep DP
    over candidates sorted by right endpoint computes the minimum hit count
    exactly.
    """
    ind = sorted(ind_items, key=lambda iv: iv.l)
    ind_ls = [iv.l for iv in ind]
    ind_rs = [iv.r for iv in ind]
    ind_ids = {iv.id for iv in ind}
    cands = sorted((iv for iv in all_items if iv.id not in ind_ids), key=lambda iv: (iv.r, iv.l))
    if not cands:
        return True
    m = len(cands)
    hit = [_hit_range(iv, ind_ls, ind_rs) for iv in cands]
    size = [hi - lo + 1 if lo <= hi else 0 for lo, hi in hit]
    rvals = [iv.r for iv in cands]

    prev_layer: Optional[list] = None
    for c in range(1, k + 2):
        layer: list = [None] * m
        if c == 1:
            for j in range(m):
                layer[j] = size[j]
                if size[j] == 0:
                    return False
        else:
            # prefix minima of the previous layer in right-endpoint order:
            # one global, one per shared-boundary member index
            pref_min: list = [None] * m
            running = None
            group: dict[int, tuple[list, list]] = {}
            for i in range(m):
                v = prev_layer[i]
                if v is not None:
                    running = v if running is None else min(running, v)
                    lo_i, hi_i = hit[i]
                    if lo_i <= hi_i:
                        xs, mins = group.setdefault(hi_i, ([], []))
                        xs.append(rvals[i])
                        mins.append(v if not mins else min(mins[-1], v))
                pref_min[i] = running
            for j in range(m):
                p = bisect_left(rvals, cands[j].l)  # predecessors with r < l_j
                best = None
                if p > 0 and pref_min[p - 1] is not None:
                    best = pref_min[p - 1] + size[j]
                lo_j, hi_j = hit[j]
                if lo_j <= hi_j and lo_j in group:
                    xs, mins = group[lo_j]
                    g = bisect_left(xs, cands[j].l)
                    if g > 0:
                        shared = mins[g - 1] + size[j] - 1
                        best = shared if best is None else min(best, shared)
                layer[j] = best
                if best is not None and best < c:
                    return False
        prev_layer = layer
    return True


def find_alt_bruteforce(
    all_items: Sequence[Interval],
    ind_items: Sequence[Interval],
    k: int,
    window: Optional[tuple] = None,
    direction: str = "right",
) -> Optional[tuple[list[Interval], list[Interval]]]:
    """Enumerate an improving swap (A, B), |B| = |A| + 1 <= k + 1, if any.

    With `window` = (a, b), restrict to swaps whose extreme added interval
    starts (direction "right") or ends (direction "left") inside the open
    window, mirroring the windowed search of the maintained structure.
    Enumeration over disjoint candidate subsets; small inputs only.
    """
    if len(all_items) > 60:
        raise PreconditionError("find_alt_bruteforce limited to n <= 60")
    ind = sorted(ind_items, key=lambda iv: iv.l)
    ind_ids = {iv.id for iv in ind}
    cands = sorted((iv for iv in all_items if iv.id not in ind_ids), key=lambda iv: (iv.l, iv.id))

    def hits(group: list[Interval]) -> list[Interval]:
        return [m for m in ind if any(m.intersects(y) for y in group)]

    def in_window(group: list[Interval]) -> bool:
        if window is None:
            return True
        a, b = window
        if direction == "right":
            key = min(y.l for y in group)
        else:
            key = max(y.r for y in group)
        return (a is None or key > a) and (b is None or key < b)

    def reduce_exact(group: list[Interval]) -> Optional[tuple[list, list]]:
        group = sorted(group, key=lambda iv: iv.l)
        while True:
            a = hits(group)
            if len(a) >= len(group):
                return None
            if len(a) == len(group) - 1:
                return a, group
            group = group[: len(a) + 1] if direction == "right" else group[-(len(a) + 1):]

    found: list[Optional[tuple]] = [None]

    def dfs(start: int, chosen: list[Interval]):
        if found[0] is not None:
            return
        if chosen:
            got = reduce_exact(list(chosen))
            if got is not None and in_window(got[1]):
                found[0] = got
                return
        if len(chosen) == k + 1:
            return
        frontier = chosen[-1].r if chosen else None
        for idx in range(start, len(cands)):
            y = cands[idx]
            if frontier is None or y.l > frontier:
                chosen.append(y)
                dfs(idx + 1, chosen)
                chosen.pop()
                if found[0] is not None:
                    return

    dfs(0, [])
    return found[0]


def check_k_valid(all_items: Sequence[Interval], ind_items: Sequence[Interval], k: int) -> bool:
    """Independence + no-containment + k-maximality of the member set."""
    ind = sorted(ind_items, key=lambda iv: iv.l)
    ids = {iv.id for iv in all_items}
    if any(iv.id not in ids for iv in ind):
        return False
    for a, b in zip(ind, ind[1:]):
        if b.l <= a.r:
            return False
    if not no_containment_ok(all_items, ind):
        return False
    return is_k_maximal(all_items, ind, k)


# --------------------------------------------------------------------------
# squares


def _adjacency(squares: Sequence[Square]) -> list[int]:
    n = len(squares)
    adj = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if squares[i].intersects(squares[j]):
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def exact_squares(squares: Sequence[Square]) -> tuple[int, list[Square]]:
    """Exact square MIS by branch and bound (greedy bound, clique-cover bound)."""
    n = len(squares)
    if n > 60:
        raise PreconditionError("exact_squares limited to n <= 60")
    if n == 0:
        return 0, []
    adj = _adjacency(squares)
    full = (1 << n) - 1

    def greedy(mask: int) -> int:
        best, m = 0, mask
        while m:
            i = (m & -m).bit_length() - 1
            best += 1
            m &= ~(adj[i] | (1 << i))
        return best

    def clique_cover_bound(mask: int) -> int:
        cliques: list[tuple[int, int]] = []  # (member mask, common adjacency)
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            m &= m - 1
            for idx, (cm, common) in enumerate(cliques):
                if common & (1 << i):
                    cliques[idx] = (cm | (1 << i), common & adj[i])
                    break
            else:
                cliques.append((1 << i, adj[i]))
        return len(cliques)

    best_mask = 0

    def bb(mask: int, picked: int, picked_count: int):
        nonlocal best_mask
        if picked_count + clique_cover_bound(mask) <= best_mask.bit_count():
            return
        if mask == 0:
            if picked_count > best_mask.bit_count():
                best_mask = picked
            return
        # branch on the highest-degree remaining vertex
        m, pivot, deg = mask, -1, -1
        while m:
            i = (m & -m).bit_length() - 1
            d = (adj[i] & mask).bit_count()
            if d > deg:
                pivot, deg = i, d
            m &= m - 1
        bb(mask & ~(adj[pivot] | (1 << pivot)), picked | (1 << pivot), picked_count + 1)
        bb(mask & ~(1 << pivot), picked, picked_count)

    seed = 0
    m = full
    while m:
        i = (m & -m).bit_length() - 1
        seed |= 1 << i
        m &= ~(adj[i] | (1 << i))
    best_mask = seed
    bb(full, 0, 0)
    witness = [squares[i] for i in range(n) if best_mask >> i & 1]
    return best_mask.bit_count(), witness


def exhaustive_squares(squares: Sequence[Square]) -> int:
    n = len(squares)
    if n > 16:
        raise PreconditionError("exhaustive_squares limited to n <= 16")
    adj = _adjacency(squares)
    best = 0
    for mask in range(1 << n):
        m, ok = mask, True
        while m:
            i = (m & -m).bit_length() - 1
            if adj[i] & mask:
                ok = False
                break
            m &= m - 1
        if ok:
            best = max(best, mask.bit_count())
    return best
