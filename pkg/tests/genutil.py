"""Shared random-instance generators for tests and the acceptance suite."""

import random

from geomis.geometry import CellId, QuadrantLabel, QuadRoot, Square
from geomis.static_pipeline import PathDescriptor

QUADRANTS = list(QuadrantLabel)


def random_square(rng: random.Random, max_size: float = 0.3, sid: int = 0) -> Square:
    size = rng.uniform(1e-4, max_size)
    return Square(sid, rng.uniform(0, 1 - size), rng.uniform(0, 1 - size), size)


def random_square_batch(rng: random.Random, n: int, max_size: float = 0.3) -> list[Square]:
    return [random_square(rng, max_size, sid=i) for i in range(n)]


def random_chain_cell(rng: random.Random, depth: int) -> CellId:
    cell = CellId(0, 0, 0)
    for _ in range(depth):
        cell = cell.child(rng.choice(QUADRANTS))
    return cell


def square_on_cell(rng: random.Random, root: QuadRoot, cell: CellId, sid: int):
    """Quantized square whose minimal cell is `cell`, strictly covering its center."""
    span = 1 << (root.bits - cell.depth)
    x0, y0 = cell.ix * span, cell.iy * span
    half = span // 2
    x1 = x0 + rng.randint(0, half - 1)
    x2 = x0 + half + rng.randint(1, half)
    y1 = y0 + rng.randint(0, half - 1)
    y2 = y0 + half + rng.randint(1, half)
    from geomis.geometry import QuantizedSquare

    return QuantizedSquare(sid, x1, x2, y1, y2)


def random_monotone_path_config(rng: random.Random, max_squares: int = 10):
    """A root, a single-child chain, and squares on its chain nodes."""
    root = QuadRoot(rng.getrandbits(48), bits=20)
    top_depth = rng.randint(0, 3)
    bottom_depth = top_depth + rng.randint(2, 9)
    bottom = random_chain_cell(rng, bottom_depth)
    p = PathDescriptor(bottom.ancestor_at(top_depth), bottom)
    squares = []
    depths = list(p.member_depths())
    rng.shuffle(depths)
    for d in depths[: rng.randint(1, max_squares)]:
        q = square_on_cell(rng, root, p.cell_at(d), sid=len(squares))
        if root.node_of(q) == p.cell_at(d):
            squares.append(q)
    return root, p, squares
