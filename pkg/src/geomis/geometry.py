"""Exact primitive types: rational keys, intervals, squares, quadtree cells.

All interval endpoints are arbitrary-precision rationals so midpoints and
fractional offsets stay exact.  Square geometry is snapped once, at
ingestion, to a B-bit grid local to a seeded random root cell; every later
cell computation is integer arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

RationalKey = Fraction


def key_between(a: RationalKey, b: RationalKey) -> RationalKey:
    """Deterministic key strictly between a and b (arithmetic midpoint).

    Plain ints are acceptable keys (a rational with denominator 1), so the
    midpoint is built as an explicit fraction to stay exact.
    """
    if not a < b:
        raise ValueError(f"key_between requires a < b, got {a} >= {b}")
    mid = Fraction(a + b, 2) if isinstance(a, int) and isinstance(b, int) else (a + b) / 2
    return int(mid) if mid.denominator == 1 else mid


def format_key(k: RationalKey) -> str:
    return f"{k.numerator}/{k.denominator}"


def parse_key(s: str) -> RationalKey:
    if "/" in s:
        num, den = s.split("/")
        f = Fraction(int(num), int(den))
        return int(f) if f.denominator == 1 else f
    try:
        return int(s)
    except ValueError:
        f = Fraction(s)
        return int(f) if f.denominator == 1 else f


@dataclass(frozen=True)
class Interval:
    """Closed interval [l, r] with a unique id.

    `synthetic` marks internal sentinel intervals that never appear in
    reported change lists.
    """

    id: int
    l: RationalKey
    r: RationalKey
    synthetic: bool = False

    def __post_init__(self):
        if not self.l < self.r:
            raise ValueError(f"interval {self.id}: need l < r, got [{self.l}, {self.r}]")

    def intersects(self, other: "Interval") -> bool:
        return max(self.l, other.l) <= min(self.r, other.r)

    def contains_point(self, p: RationalKey) -> bool:
        return self.l <= p <= self.r

    def strictly_contains(self, other: "Interval") -> bool:
        return self.l < other.l and other.r < self.r


def intervals_independent(items) -> bool:
    by_l = sorted(items, key=lambda iv: (iv.l, iv.id))
    return all(a.r < b.l for a, b in zip(by_l, by_l[1:]))


@dataclass(frozen=True)
class Square:
    """Closed axis-aligned square [x, x+size] x [y, y+size] inside [0,1]^2."""

    id: int
    x: float
    y: float
    size: float

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"square {self.id}: size must be positive")
        if self.x < 0 or self.y < 0 or self.x + self.size > 1 or self.y + self.size > 1:
            raise ValueError(f"square {self.id} not inside the unit square")

    def intersects(self, other: "Square") -> bool:
        return (
            self.x <= other.x + other.size
            and other.x <= self.x + self.size
            and self.y <= other.y + other.size
            and other.y <= self.y + self.size
        )

    def to_json(self) -> dict:
        return {"id": self.id, "x": self.x, "y": self.y, "size": self.size}

    @staticmethod
    def from_json(d: dict) -> "Square":
        return Square(d["id"], d["x"], d["y"], d["size"])


class QuadrantLabel(Enum):
    """Child quadrant of a cell; encoded as (high-x, high-y) index bits."""

    I = (1, 1)  # upper-right
    II = (0, 1)  # upper-left
    III = (0, 0)  # lower-left
    IV = (1, 0)  # lower-right

    @property
    def xbit(self) -> int:
        return self.value[0]

    @property
    def ybit(self) -> int:
        return self.value[1]


_BY_BITS = {q.value: q for q in QuadrantLabel}


def quadrant_from_bits(xbit: int, ybit: int) -> QuadrantLabel:
    return _BY_BITS[(xbit, ybit)]


@dataclass(frozen=True, order=True)
class CellId:
    """Quadtree cell address: depth plus x/y indices below 2^depth."""

    depth: int
    ix: int
    iy: int

    def __post_init__(self):
        if self.depth < 0 or not (0 <= self.ix < 1 << self.depth) or not (0 <= self.iy < 1 << self.depth):
            raise ValueError(f"bad cell {self}")

    def parent(self) -> "CellId":
        if self.depth == 0:
            raise ValueError("root cell has no parent")
        return CellId(self.depth - 1, self.ix >> 1, self.iy >> 1)

    def child(self, q: QuadrantLabel) -> "CellId":
        return CellId(self.depth + 1, (self.ix << 1) | q.xbit, (self.iy << 1) | q.ybit)

    def ancestor_at(self, depth: int) -> "CellId":
        if depth > self.depth:
            raise ValueError("ancestor_at: depth below cell")
        shift = self.depth - depth
        return CellId(depth, self.ix >> shift, self.iy >> shift)

    def is_ancestor_of(self, other: "CellId") -> bool:
        """Strict ancestry."""
        return self.depth < other.depth and other.ancestor_at(self.depth) == self


def quadrant_of(child: CellId, parent: CellId) -> QuadrantLabel:
    if child.depth != parent.depth + 1 or child.parent() != parent:
        raise ValueError(f"{parent} is not the parent of {child}")
    return quadrant_from_bits(child.ix & 1, child.iy & 1)


ROOT_CELL = CellId(0, 0, 0)


@dataclass(frozen=True)
class QuantizedSquare:
    """Square snapped to the root-local grid: [x1, x2] x [y1, y2] in grid units."""

    id: int
    x1: int
    x2: int
    y1: int
    y2: int


class QuadRoot:
    """Seeded random root cell whose square contains [0,1]^2.

    The reference cell has a random side in [1,2] and a random center; it is
    grown (doubling, biased toward the uncovered side) until the unit square
    fits.  Growing preserves the fine grid, so placement statistics at scales
    below 1 depend only on the seeded side and center.
    """

    def __init__(self, seed: int, bits: int = 40):
        self.seed = seed
        self.bits = bits
        rng = random.Random(seed)
        width = 1 + Fraction(rng.getrandbits(53), 1 << 53)
        cx = Fraction(rng.getrandbits(53), 1 << 53)
        cy = Fraction(rng.getrandbits(53), 1 << 53)
        ox, oy = cx - width / 2, cy - width / 2
        for _ in range(8):
            if ox <= 0 and oy <= 0 and ox + width >= 1 and oy + width >= 1:
                break
            ox -= width if ox > 0 else 0
            oy -= width if oy > 0 else 0
            width *= 2
        else:
            raise AssertionError("root growth did not terminate")
        self.ox: Fraction = ox
        self.oy: Fraction = oy
        self.side: Fraction = width

    def to_json(self) -> dict:
        return {"seed": self.seed, "B": self.bits}

    @staticmethod
    def from_json(d: dict) -> "QuadRoot":
        return QuadRoot(d["seed"], d.get("B", 40))

    @classmethod
    def explicit(cls, ox, oy, side, bits: int = 40) -> "QuadRoot":
        """Fixed root geometry (tests and worked examples)."""
        r = cls.__new__(cls)
        r.seed, r.bits = -1, bits
        r.ox, r.oy, r.side = Fraction(ox), Fraction(oy), Fraction(side)
        return r

    def _snap(self, lo: Fraction, hi: Fraction, off: Fraction) -> tuple[int, int]:
        scale = Fraction(1 << self.bits) / self.side
        g1 = int((lo - off) * scale + Fraction(1, 2))
        g2 = int((hi - off) * scale + Fraction(1, 2))
        g1 = max(0, min(g1, (1 << self.bits) - 1))
        g2 = max(g1 + 1, min(g2, 1 << self.bits))
        return g1, g2

    def quantize(self, s: Square) -> QuantizedSquare:
        """Snap a square's corners to the grid; all later geometry is exact."""
        fx, fy, fs = Fraction(s.x), Fraction(s.y), Fraction(s.size)
        x1, x2 = self._snap(fx, fx + fs, self.ox)
        y1, y2 = self._snap(fy, fy + fs, self.oy)
        return QuantizedSquare(s.id, x1, x2, y1, y2)

    def _prefix_depth(self, a: int, b: int) -> int:
        # depth of the smallest dyadic block covering unit cells [a, b]
        return self.bits - (a ^ b).bit_length() if a != b else self.bits

    def node_of(self, q: QuantizedSquare) -> CellId:
        """Smallest cell containing the (closed) quantized square."""
        dx = self._prefix_depth(q.x1, q.x2 - 1)
        dy = self._prefix_depth(q.y1, q.y2 - 1)
        d = min(dx, dy)
        return CellId(d, q.x1 >> (self.bits - d), q.y1 >> (self.bits - d))

    def cell_center2(self, cell: CellId) -> tuple[int, int]:
        """Cell center in doubled grid units (always integral for depth <= B)."""
        span = 1 << (self.bits - cell.depth)
        return ((2 * cell.ix + 1) * span, (2 * cell.iy + 1) * span)

    def square_contains_point2(self, q: QuantizedSquare, px2: int, py2: int) -> bool:
        return 2 * q.x1 <= px2 <= 2 * q.x2 and 2 * q.y1 <= py2 <= 2 * q.y2

    def is_centered(self, q: QuantizedSquare) -> bool:
        cx2, cy2 = self.cell_center2(self.node_of(q))
        return self.square_contains_point2(q, cx2, cy2)

    def cell_contains_square(self, cell: CellId, q: QuantizedSquare) -> bool:
        span = 1 << (self.bits - cell.depth)
        return (
            cell.ix * span <= q.x1
            and q.x2 <= (cell.ix + 1) * span
            and cell.iy * span <= q.y1
            and q.y2 <= (cell.iy + 1) * span
        )

    def cells_intersect_squares(self, cell: CellId, q: QuantizedSquare) -> bool:
        span = 1 << (self.bits - cell.depth)
        return (
            cell.ix * span <= q.x2
            and q.x1 <= (cell.ix + 1) * span
            and cell.iy * span <= q.y2
            and q.y1 <= (cell.iy + 1) * span
        )


def node_of_bruteforce(root: QuadRoot, q: QuantizedSquare) -> Optional[CellId]:
    """Reference node_of: scan depths from the bottom up, checking containment."""
    for d in range(root.bits, -1, -1):
        span = 1 << (root.bits - d)
        ix, iy = q.x1 // span, q.y1 // span
        if q.x2 <= (ix + 1) * span and q.y2 <= (iy + 1) * span:
            return CellId(d, ix, iy)
    return None
