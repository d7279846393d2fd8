import random
from fractions import Fraction

import pytest

import geomis.implicit_iqds as impl
from genutil import random_monotone_path_config
from geomis.geometry import Interval, QuadrantLabel
from geomis.implicit_iqds import PathQuadrantView, _bands, DELTA_MAX, THIRD
from geomis.iqds import IntervalStore
from geomis.search_structure import ID_HI, ID_LO, MarkedSquareStore
from geomis.static_pipeline import depth_delta, monotone_intervals, padded_interval


@pytest.fixture(autouse=True)
def _debug():
    impl.DEBUG_CHECKS = True
    yield
    impl.DEBUG_CHECKS = False


class FakeOwner:
    def __init__(self, root, descriptor, squares):
        self.root = root
        self.descriptor = descriptor
        self.store = MarkedSquareStore()
        self.by_id = {}
        self.by_node = {}
        for q in squares:
            node = root.node_of(q)
            label = descriptor.label_at(node.depth)
            self.store.insert(q, label)
            self.by_id[q.id] = q
            self.by_node.setdefault(node, []).append(q)

    def square_by_id(self, sid):
        return self.by_id[sid]

    def node_square_list(self, cell):
        return self.by_node.get(cell, [])


def build_views(rng):
    root, p, squares = random_monotone_path_config(rng, max_squares=12)
    owner = FakeOwner(root, p, squares)
    views = {q: PathQuadrantView(owner, q) for q in QuadrantLabel}
    return root, p, squares, owner, views


def test_bands_arithmetic_exhaustive():
    # brute force the band classification for every depth and a grid of bounds
    ids = [0, 3, 7, (1 << 63) - 1]
    for o in (-THIRD, THIRD):
        for an, ad in [(None, None), (1, 1), (5, 3), (7, 2), (-3, 1), (17, 6)]:
            a = None if an is None else Fraction(an, ad)
            for bn, bd in [(None, None), (9, 1), (22, 3), (40, 7)]:
                b = None if bn is None else Fraction(bn, bd)
                full_lo, full_hi, bands = _bands(a, b, o)
                band_of = {h: (ilo, ihi) for h, ilo, ihi in bands}
                for depth in range(-2, 16):
                    for sid in ids:
                        val = Fraction(depth) + o + depth_delta(sid)
                        inside = (a is None or val > a) and (b is None or val < b)
                        in_full = (full_lo is None or depth >= full_lo) and (
                            full_hi is None or depth <= full_hi
                        )
                        in_band = depth in band_of and band_of[depth][0] <= sid <= band_of[depth][1]
                        assert inside == (in_full or in_band), (o, a, b, depth, sid)


def test_get_interval_matches_batch_computation():
    rng = random.Random(23)
    for _ in range(200):
        root, p, squares, owner, views = build_views(rng)
        groups = {}
        for s in squares:
            groups.setdefault(p.label_at(root.node_of(s).depth), []).append(s)
        for q, group in groups.items():
            expected = dict(monotone_intervals(p, q, group, root))
            for s in group:
                assert views[q].get_interval_raw(s) == expected[s.id]


def test_report_extreme_matches_explicit_store():
    rng = random.Random(29)
    for trial in range(150):
        root, p, squares, owner, views = build_views(rng)
        for q in QuadrantLabel:
            view = views[q]
            items = view.items_by_l()
            explicit = IntervalStore(seed=trial)
            for iv in items:
                explicit.insert(iv)
            # windows: existing endpoint values, integers, midpoints, open ends
            vals = [iv.l for iv in items] + [iv.r for iv in items]
            vals += [Fraction(d) for d in range(0, 14, 3)]
            vals += [v + Fraction(1, 2) for v in vals[:4]]
            probes = []
            for _ in range(12):
                a = rng.choice(vals + [None])
                b = rng.choice(vals + [None])
                if a is not None and b is not None and a >= b:
                    a, b = (b, a) if b < a else (a, b)
                    if a == b:
                        continue
                probes.append((a, b))
            for a, b in probes:
                got_lr = view.leftmost_right(a, b)
                want_lr = explicit.leftmost_right(a, b)
                assert got_lr == want_lr, (trial, q, a, b, items)
                got_rl = view.rightmost_left(a, b)
                want_rl = explicit.rightmost_left(a, b)
                assert got_rl == want_rl, (trial, q, a, b, items)


def test_overlay_participates_in_queries():
    rng = random.Random(31)
    root, p, squares, owner, views = build_views(rng)
    q = QuadrantLabel.I
    view = views[q]
    sentinel = Interval(-5, Fraction(3, 2), Fraction(8, 5), synthetic=True)
    view.insert(sentinel)
    got = view.leftmost_right(Fraction(1), Fraction(2))
    assert got is not None and (got.id == -5 or got.r < sentinel.r)
    view.delete(sentinel)
    assert all(iv.id != -5 for iv in view.items_by_l())


def test_region_exists_roundtrip():
    rng = random.Random(37)
    hits = 0
    for _ in range(120):
        root, p, squares, owner, views = build_views(rng)
        for q in QuadrantLabel:
            view = views[q]
            depths = view.quadrant_depths()
            if not depths:
                continue
            truth = {}
            for iv in view.items_by_l():
                if iv.synthetic:
                    continue
                truth[iv.id] = view.get_interval_raw(owner.square_by_id(iv.id))
            for _ in range(6):
                i = rng.randrange(len(depths))
                j = rng.randrange(i, len(depths))
                k = rng.randrange(len(depths))
                m = rng.randrange(k, len(depths))
                l1, l2 = depths[i], depths[j]
                r1, r2 = depths[k], depths[m]
                want = [
                    sid
                    for sid, (lo, hi) in truth.items()
                    if l1 <= lo <= l2 and r1 <= hi <= r2
                ]
                got = view.region_exists(l1, l2, r1, r2)
                if want:
                    hits += 1
                    assert got == min(want), (l1, l2, r1, r2, truth)
                    assert view.region_exists(l1, l2, r1, r2, prefer="max") == max(want)
                else:
                    assert got is None, (l1, l2, r1, r2, truth, got)
    assert hits > 50
