"""Interval queries over a chain quadrant answered from square geometry.

Squares on a chain's quadrant-q nodes correspond to depth intervals
[own depth, deepest same-quadrant chain center covered].  Nothing is stored
per interval: the global marked square store plus the current chain
descriptor suffice.  An interval's endpoints carry the uniform 1/3 padding
and a tiny per-id offset, so endpoint values are pairwise distinct and agree
exactly with an explicitly built store over the same squares.

Extreme-endpoint window queries binary-search over chain depths using box
probes: a square has depth interval [lo, hi] within given ranges iff its
shallow corner lies in one L-shaped region around the lo-range centers and
its deep corner in another around the hi-range centers, both inside the
chain's top cell.  Window bounds that fall inside a depth's tiny offset band
add an id-window, resolved exactly by the store's id dimension.

Synthetic intervals used by structural protocols live in a small overlay.
"""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Optional

from geomis.errors import InternalInvariantError, MembershipError, PreconditionError
from geomis.geometry import Interval, QuadrantLabel, QuantizedSquare
from geomis.search_structure import ID_HI, ID_LO
from geomis.static_pipeline import depth_delta, padded_interval

DEBUG_CHECKS = False

THIRD = Fraction(1, 3)
DELTA_MAX = Fraction(1 << 63, 1 << 70)
INF = 1 << 80


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _least_id_with_offset_above(w: Fraction) -> int:
    """Least id whose offset (id+1)/2^70 strictly exceeds w."""
    return _floor(w * (1 << 70) - 1) + 1


def _greatest_id_with_offset_below(w: Fraction) -> int:
    """Greatest id whose offset is strictly below w."""
    return _ceil(w * (1 << 70) - 1) - 1


def _bands(a: Optional[Fraction], b: Optional[Fraction], o: Fraction):
    """Split depths whose endpoint (depth + o + offset) lies in the open
    window (a, b) into a fully-covered integer range plus at most two
    id-windowed boundary depths."""
    full_lo = None if a is None else _ceil(a - o)
    full_hi = None if b is None else _ceil(b - o - DELTA_MAX) - 1
    bands = []
    if a is not None:
        h = _ceil(a - o) - 1
        w = a - h - o
        if 0 < w < DELTA_MAX:
            bands.append((h, _least_id_with_offset_above(w), ID_HI))
    if b is not None:
        h = _ceil(b - o) - 1
        w = b - h - o
        if 0 < w <= DELTA_MAX:
            bands.append((h, ID_LO, _greatest_id_with_offset_below(w)))
    return full_lo, full_hi, bands


class PathQuadrantView:
    """Query-only interval view over one (chain, quadrant) pair."""

    def __init__(self, owner, q: QuadrantLabel):
        self.owner = owner  # provides descriptor, root, store, square_by_id, node_square_list
        self.q = q
        self.overlay: dict[int, Interval] = {}

    # -- store interface used by the exchange machinery ---------------------

    def insert(self, iv: Interval) -> None:
        if not iv.synthetic:
            return  # real squares already live in the global store
        if iv.id in self.overlay:
            raise MembershipError(f"synthetic interval {iv.id} already present")
        self.overlay[iv.id] = iv

    def delete(self, iv: Interval) -> None:
        if not iv.synthetic:
            return
        if iv.id not in self.overlay:
            raise MembershipError(f"synthetic interval {iv.id} not present")
        del self.overlay[iv.id]

    # -- geometry ------------------------------------------------------------

    def quadrant_depths(self) -> list[int]:
        return self.owner.descriptor.quadrant_depths(self.q)

    def get_interval_raw(self, qsq: QuantizedSquare) -> tuple[int, int]:
        p = self.owner.descriptor
        root = self.owner.root
        node = root.node_of(qsq)
        lo = node.depth
        if p.cell_at(lo) != node or p.label_at(lo) != self.q:
            raise PreconditionError(f"square {qsq.id} not on the {self.q} subpath")
        depths = self.quadrant_depths()
        start = bisect.bisect_left(depths, lo)
        lo_i, hi_i = start, len(depths) - 1
        best = lo
        while lo_i <= hi_i:
            mid = (lo_i + hi_i) // 2
            cx2, cy2 = root.cell_center2(p.cell_at(depths[mid]))
            if root.square_contains_point2(qsq, cx2, cy2):
                best = depths[mid]
                lo_i = mid + 1
            else:
                hi_i = mid - 1
        return lo, best

    def get_interval(self, qsq: QuantizedSquare) -> Interval:
        lo, hi = self.get_interval_raw(qsq)
        return padded_interval(qsq.id, lo, hi)

    def interval_of_id(self, sid: int) -> Interval:
        return self.get_interval(self.owner.square_by_id(sid))

    # -- region probes --------------------------------------------------------

    def _boxes(self, l1: int, l2: int, r1: int, r2: int, id_rng):
        """5-D box pieces selecting squares with lo in [l1,l2], hi in [r1,r2]."""
        p = self.owner.descriptor
        root = self.owner.root
        depths = self.quadrant_depths()
        sign_x = 1 if self.q.xbit else -1
        sign_y = 1 if self.q.ybit else -1
        sx_dim, dx_dim = (0, 2) if sign_x == 1 else (2, 0)
        sy_dim, dy_dim = (1, 3) if sign_y == 1 else (3, 1)

        def tc(depth: int) -> tuple[int, int]:
            cx, cy = root.cell_center2(p.cell_at(depth))
            return sign_x * cx, sign_y * cy

        i1 = bisect.bisect_left(depths, l1)
        i2 = bisect.bisect_left(depths, r2)
        if not (i1 < len(depths) and depths[i1] == l1 and i2 < len(depths) and depths[i2] == r2):
            raise PreconditionError("probe depths must lie on the quadrant subpath")
        l0 = depths[i1 - 1] if i1 > 0 else None
        r3 = depths[i2 + 1] if i2 + 1 < len(depths) else None

        a2 = tc(l2)
        lo_pieces = [((-INF, a2[0]), (-INF, a2[1]))]
        if l0 is not None:
            a0 = tc(l0)
            lo_pieces = [
                ((a0[0] + 1, a2[0]), (-INF, a2[1])),
                ((-INF, a0[0]), (a0[1] + 1, a2[1])),
            ]
        b1 = tc(r1)
        hi_pieces = [((b1[0], INF), (b1[1], INF))]
        if r3 is not None:
            b3 = tc(r3)
            hi_pieces = [
                ((b1[0], b3[0] - 1), (b1[1], INF)),
                ((b3[0], INF), (b1[1], b3[1] - 1)),
            ]

        top_cell = p.bottom.ancestor_at(p.top.depth + 1)
        span2 = 2 << (root.bits - top_cell.depth)
        cx_lo, cx_hi = top_cell.ix * span2, (top_cell.ix + 1) * span2
        cy_lo, cy_hi = top_cell.iy * span2, (top_cell.iy + 1) * span2
        id_lo, id_hi = id_rng if id_rng is not None else (ID_LO, ID_HI)

        def raw(dim_sign, bounds):
            lo_t, hi_t = bounds
            return (lo_t, hi_t) if dim_sign == 1 else (-hi_t, -lo_t)

        for (sxr, syr) in lo_pieces:
            for (dxr, dyr) in hi_pieces:
                lo5 = [cx_lo, cy_lo, cx_lo, cy_lo, id_lo]
                hi5 = [cx_hi, cy_hi, cx_hi, cy_hi, id_hi]
                for dim, sign, rng in (
                    (sx_dim, sign_x, sxr),
                    (sy_dim, sign_y, syr),
                    (dx_dim, sign_x, dxr),
                    (dy_dim, sign_y, dyr),
                ):
                    rlo, rhi = raw(sign, rng)
                    lo5[dim] = max(lo5[dim], rlo)
                    hi5[dim] = min(hi5[dim], rhi)
                if all(lo5[d] <= hi5[d] for d in range(5)):
                    yield tuple(lo5), tuple(hi5)

    def region_exists(
        self,
        l1: int,
        l2: int,
        r1: int,
        r2: int,
        id_rng=None,
        prefer: str = "min",
    ) -> Optional[int]:
        """Extreme id of a square whose depth interval fits the ranges."""
        store = self.owner.store
        best = None
        for lo5, hi5 in self._boxes(l1, l2, r1, r2, id_rng):
            got = store.search_box(lo5, hi5, self.q, prefer=prefer)
            if got is None:
                continue
            if best is None or (got < best if prefer == "min" else got > best):
                best = got
        if DEBUG_CHECKS and best is not None:
            lo, hi = self.get_interval_raw(self.owner.square_by_id(best))
            assert l1 <= lo <= l2 and r1 <= hi <= r2, (best, lo, hi, l1, l2, r1, r2)
        return best

    # -- extreme-endpoint queries ------------------------------------------------

    def _clamp(self, lo: Optional[int], hi: Optional[int]) -> Optional[tuple[int, int]]:
        depths = self.quadrant_depths()
        if not depths:
            return None
        i = 0 if lo is None else bisect.bisect_left(depths, lo)
        j = len(depths) - 1 if hi is None else bisect.bisect_right(depths, hi) - 1
        if i >= len(depths) or j < 0 or i > j:
            return None
        return depths[i], depths[j]

    def _min_r_in_lo_range(self, lo_rng, id_rng) -> Optional[Interval]:
        """Minimal (right endpoint, id) among squares with lo in lo_rng."""
        clamped = self._clamp(*lo_rng)
        if clamped is None:
            return None
        d_lo, d_hi = clamped
        depths = self.quadrant_depths()
        if self.region_exists(d_lo, d_hi, d_lo, depths[-1], id_rng) is None:
            return None
        lo_i = bisect.bisect_left(depths, d_lo)
        hi_i = len(depths) - 1
        best_m = hi_i
        lo_m = lo_i
        while lo_m <= hi_i:
            mid = (lo_m + hi_i) // 2
            if self.region_exists(d_lo, d_hi, d_lo, depths[mid], id_rng) is not None:
                best_m, hi_i = mid, mid - 1
            else:
                lo_m = mid + 1
        sid = self.region_exists(d_lo, d_hi, depths[best_m], depths[best_m], id_rng, prefer="min")
        if sid is None:
            raise InternalInvariantError("binary search lost its witness")
        return self.interval_of_id(sid)

    def _max_l_in_lo_range(self, lo_rng, id_rng) -> Optional[Interval]:
        """Maximal (left endpoint) among squares with lo in lo_rng."""
        clamped = self._clamp(*lo_rng)
        if clamped is None:
            return None
        d_lo, d_hi = clamped
        depths = self.quadrant_depths()
        if self.region_exists(d_lo, d_hi, d_lo, depths[-1], id_rng) is None:
            return None
        lo_i = bisect.bisect_left(depths, d_lo)
        hi_i = bisect.bisect_right(depths, d_hi) - 1
        best_m = lo_i
        lo_m = lo_i
        while lo_m <= hi_i:
            mid = (lo_m + hi_i) // 2
            if self.region_exists(depths[mid], d_hi, depths[mid], depths[-1], id_rng) is not None:
                best_m, lo_m = mid, mid + 1
            else:
                hi_i = mid - 1
        sid = self.region_exists(
            depths[best_m], depths[best_m], depths[best_m], depths[-1], id_rng, prefer="max"
        )
        if sid is None:
            raise InternalInvariantError("binary search lost its witness")
        return self.interval_of_id(sid)

    def _max_l_in_hi_range(self, hi_rng, id_rng) -> Optional[Interval]:
        """Maximal (left endpoint) among squares with hi in hi_rng."""
        clamped = self._clamp(*hi_rng)
        if clamped is None:
            return None
        d_lo, d_hi = clamped
        depths = self.quadrant_depths()
        if self.region_exists(depths[0], d_hi, d_lo, d_hi, id_rng) is None:
            return None
        lo_i = 0
        hi_i = bisect.bisect_right(depths, d_hi) - 1
        best_m = 0
        lo_m = lo_i
        while lo_m <= hi_i:
            mid = (lo_m + hi_i) // 2
            if self.region_exists(depths[mid], d_hi, d_lo, d_hi, id_rng) is not None:
                best_m, lo_m = mid, mid + 1
            else:
                hi_i = mid - 1
        sid = self.region_exists(depths[best_m], depths[best_m], d_lo, d_hi, id_rng, prefer="max")
        if sid is None:
            raise InternalInvariantError("binary search lost its witness")
        return self.interval_of_id(sid)

    def leftmost_right(self, a, b) -> Optional[Interval]:
        cands = [iv for iv in self.overlay.values() if (a is None or iv.l > a) and (b is None or iv.l < b)]
        full_lo, full_hi, bands = _bands(a, b, -THIRD)
        got = self._min_r_in_lo_range((full_lo, full_hi), None)
        if got is not None:
            cands.append(got)
        merged_bands = self._merge_bands(bands)
        for h, id_lo, id_hi in merged_bands:
            if id_lo > id_hi:
                continue
            got = self._min_r_in_lo_range((h, h), (id_lo, id_hi))
            if got is not None:
                cands.append(got)
        return min(cands, key=lambda iv: (iv.r, iv.id)) if cands else None

    def rightmost_left(self, a, b) -> Optional[Interval]:
        cands = [iv for iv in self.overlay.values() if (a is None or iv.r > a) and (b is None or iv.r < b)]
        full_lo, full_hi, bands = _bands(a, b, THIRD)
        got = self._max_l_in_hi_range((full_lo, full_hi), None)
        if got is not None:
            cands.append(got)
        merged_bands = self._merge_bands(bands)
        for h, id_lo, id_hi in merged_bands:
            if id_lo > id_hi:
                continue
            got = self._max_l_in_hi_range((h, h), (id_lo, id_hi))
            if got is not None:
                cands.append(got)
        return max(cands, key=lambda iv: (iv.l, -iv.id)) if cands else None

    @staticmethod
    def _merge_bands(bands):
        if len(bands) == 2 and bands[0][0] == bands[1][0]:
            h = bands[0][0]
            return [(h, max(bands[0][1], bands[1][1]), min(bands[0][2], bands[1][2]))]
        return bands

    def report_extreme(self, direction: str, a, b) -> Optional[Interval]:
        if direction == "leftmost-right":
            return self.leftmost_right(a, b)
        if direction == "rightmost-left":
            return self.rightmost_left(a, b)
        raise ValueError(f"unknown direction {direction!r}")

    # -- enumeration (verification and differential tests) ------------------------

    def items_by_l(self) -> list[Interval]:
        p = self.owner.descriptor
        out = list(self.overlay.values())
        for d in p.member_depths():
            if p.label_at(d) != self.q:
                continue
            for qsq in self.owner.node_square_list(p.cell_at(d)):
                out.append(self.get_interval(qsq))
        out.sort(key=lambda iv: (iv.l, iv.id))
        return out
