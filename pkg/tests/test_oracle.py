import random
from fractions import Fraction

from geomis.geometry import Interval, Square
from geomis.oracle import (
    check_k_valid,
    exact_intervals,
    exact_squares,
    exhaustive_intervals,
    exhaustive_squares,
    find_alt_bruteforce,
    is_k_maximal,
    no_containment_ok,
)


def iv(i, l, r):
    return Interval(i, Fraction(l), Fraction(r))


def random_instance(rng, n, span=60):
    out = []
    for i in range(n):
        a = rng.randint(0, span)
        b = a + rng.randint(1, span // 3)
        out.append(iv(i, a, b))
    return out


def random_independent_subset(rng, items):
    chosen = []
    for x in sorted(items, key=lambda v: rng.random()):
        if all(not x.intersects(c) for c in chosen):
            if rng.random() < 0.8:
                chosen.append(x)
    return chosen


def test_exact_intervals_examples():
    items = [iv(1, 0, 2), iv(2, 1, 3), iv(3, Fraction(5, 2), 4)]
    cnt, wit = exact_intervals(items)
    assert cnt == 2 and {w.id for w in wit} == {1, 3}
    disjoint = [iv(i, 3 * i, 3 * i + 1) for i in range(8)]
    assert exact_intervals(disjoint)[0] == 8
    nested = [iv(i, i, 20 - i) for i in range(8)]
    assert exact_intervals(nested)[0] == 1


def test_exact_intervals_matches_exhaustive():
    rng = random.Random(23)
    for _ in range(300):
        items = random_instance(rng, rng.randint(0, 13))
        assert exact_intervals(items)[0] == exhaustive_intervals(items)


def enumeration_k_maximal(items, ind, k):
    return find_alt_bruteforce(items, ind, k) is None


def test_is_k_maximal_matches_enumeration():
    rng = random.Random(29)
    for trial in range(400):
        items = random_instance(rng, rng.randint(1, 14), span=40)
        ind = random_independent_subset(rng, items)
        for k in (0, 1, 2, 3):
            fast = is_k_maximal(items, ind, k)
            slow = enumeration_k_maximal(items, ind, k)
            assert fast == slow, (trial, k, items, ind)


def test_no_containment():
    items = [iv(1, 0, 10), iv(2, 2, 3)]
    assert not no_containment_ok(items, [items[0]])
    assert no_containment_ok(items, [items[1]])
    assert no_containment_ok([], [])


def test_check_k_valid_trivials():
    assert check_k_valid([], [], 3)
    items = [iv(1, 0, 2), iv(2, 5, 6)]
    assert not check_k_valid(items, [items[0]], 0)  # misses a free interval
    assert check_k_valid(items, items, 3)


def test_find_alt_returns_valid_witness():
    rng = random.Random(31)
    found = 0
    for _ in range(200):
        items = random_instance(rng, rng.randint(2, 12), span=30)
        ind = random_independent_subset(rng, items)
        got = find_alt_bruteforce(items, ind, 2)
        if got is None:
            continue
        found += 1
        a, b = got
        assert len(b) == len(a) + 1 <= 3
        ind_ids = {x.id for x in ind}
        assert all(x.id in ind_ids for x in a)
        assert all(x.id not in ind_ids for x in b)
        survivors = [x for x in ind if x.id not in {y.id for y in a}] + b
        for p in survivors:
            for q in survivors:
                if p.id < q.id:
                    assert not p.intersects(q)
    assert found > 20


def test_exact_squares_examples():
    far = [Square(i, 0.3 * i, 0.1, 0.1) for i in range(3)]
    assert exact_squares(far)[0] == 3
    stacked = [Square(i, 0.4, 0.4, 0.1 + 0.05 * i) for i in range(5)]
    assert exact_squares(stacked)[0] == 1


def test_exact_squares_matches_exhaustive():
    rng = random.Random(37)
    for _ in range(60):
        n = rng.randint(0, 12)
        squares = []
        for i in range(n):
            size = rng.uniform(0.05, 0.4)
            squares.append(Square(i, rng.uniform(0, 1 - size), rng.uniform(0, 1 - size), size))
        cnt, wit = exact_squares(squares)
        assert cnt == exhaustive_squares(squares)
        for p in wit:
            for q in wit:
                if p.id < q.id:
                    assert not p.intersects(q)
