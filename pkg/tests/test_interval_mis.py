import random
from fractions import Fraction

import pytest

import geomis.interval_mis as im
from geomis import oracle
from geomis.errors import MembershipError, PreconditionError
from geomis.geometry import Interval
from geomis.interval_mis import Delta, IntervalMis


def iv(i, l, r):
    return Interval(i, Fraction(l), Fraction(r))


@pytest.fixture(autouse=True)
def _debug_checks():
    im.DEBUG_CHECKS = True
    yield
    im.DEBUG_CHECKS = False


def forced_state(items, member_ids, k=2):
    """Build a structure in a prescribed (not necessarily reachable) state."""
    mis = IntervalMis(k=k, seed=99)
    for x in items:
        mis.S.insert(x)
        mis.by_id[x.id] = x
        if x.id in member_ids:
            mis.I.insert(x)
    return mis


def member_ids(mis):
    return {x.id for x in mis.members()}


def test_insert_trivials():
    mis = IntervalMis(k=2)
    d = mis.insert(iv(1, 0, 1))
    assert d.entries == [("add", 1)]
    assert member_ids(mis) == {1}


def test_insert_contained_replaces():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 10))
    d = mis.insert(iv(2, 2, 3))
    assert sorted(d.entries) == [("add", 2), ("remove", 1)]
    assert member_ids(mis) == {2}
    d2 = mis.insert(iv(3, 6, 9))
    assert d2.entries == [("add", 3)]
    assert member_ids(mis) == {2, 3}
    opt, _ = oracle.exact_intervals(mis.S.items_by_l())
    assert len(mis.members()) == opt == 2


def test_delete_nonmember_is_silent():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 10))
    mis.insert(iv(2, 2, 3))
    assert member_ids(mis) == {2}
    d = mis.delete(iv(1, 0, 10))
    assert d.entries == []
    assert mis.verify_k_valid()


def test_delete_example_touching_blocker():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 4))
    mis.insert(iv(2, 3, 8))
    mis.insert(iv(3, 7, 11))
    assert member_ids(mis) == {1, 3}
    d = mis.delete(iv(1, 0, 4))
    assert d.entries == [("remove", 1)]
    assert member_ids(mis) == {3}
    assert mis.verify_k_valid()


def test_delete_replaced_by_superset():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 2))
    mis.insert(iv(2, 0, 3))  # left endpoint collides; nudged down at ingestion
    assert member_ids(mis) == {1}
    d = mis.delete(iv(1, 0, 2))
    assert sorted(d.entries) == [("add", 2), ("remove", 1)]
    assert mis.verify_k_valid()


def test_find_path_right_examples():
    mis = forced_state([iv(1, 0, 4), iv(2, 7, 11), iv(3, 5, 6)], {1, 2})
    path = mis.find_alternating_path("right", 1, Fraction(4), Fraction(7))
    assert path is not None
    removed, added = path
    assert removed == [] and [x.id for x in added] == [3]

    mis2 = forced_state([iv(1, 0, 4), iv(2, 7, 11), iv(3, 3, 8)], {1, 2})
    assert mis2.find_alternating_path("right", 2, Fraction(2), Fraction(7)) is None
    empty = forced_state([iv(1, 0, 4), iv(2, 7, 11)], {1, 2})
    assert empty.find_alternating_path("right", 2, Fraction(4), Fraction(7)) is None


def test_find_path_matches_bruteforce_windowed():
    rng = random.Random(43)
    for _ in range(250):
        n = rng.randint(2, 14)
        items = []
        for i in range(n):
            a = rng.randint(0, 40)
            items.append(iv(i, a, a + rng.randint(1, 12)))
        # force distinct endpoints by skipping colliding instances
        vals = [x.l for x in items] + [x.r for x in items]
        if len(set(vals)) != len(vals):
            continue
        members = []
        for x in sorted(items, key=lambda v: rng.random()):
            if all(not x.intersects(c) for c in members):
                members.append(x)
        # drop members strictly containing a non-member (keeps the state valid-shaped)
        mids = {x.id for x in members}
        members = [
            m
            for m in members
            if not any(m.strictly_contains(y) for y in items if y.id not in mids)
        ]
        mis = forced_state(items, {m.id for m in members}, k=3)
        ordered = sorted(members, key=lambda m: m.l)
        # canonical windows lie inside one member-free gap, ends inclusive
        gaps = []
        prev = None
        for m in ordered + [None]:
            gaps.append((prev.r if prev is not None else Fraction(-10), m.l if m is not None else Fraction(60)))
            prev = m
        for _ in range(4):
            budget = rng.randint(0, 3)
            direction = rng.choice(["right", "left"])
            lo, hi = gaps[rng.randrange(len(gaps))]
            if hi - lo < 2:
                continue
            a = lo + Fraction(rng.randint(0, int(hi - lo) - 1))
            b = a + Fraction(rng.randint(1, int(hi - a)))
            got = mis.find_alternating_path(direction, budget, a, b)
            expect = oracle.find_alt_bruteforce(items, members, budget, window=(a, b), direction=direction)
            if got is None:
                assert expect is None, (items, members, direction, budget, a, b)
            else:
                removed, added = got
                assert len(added) == len(removed) + 1 <= budget + 1
                survivors = [x for x in members if x.id not in {r.id for r in removed}] + added
                for p in survivors:
                    for q in survivors:
                        if p.id < q.id:
                            assert not p.intersects(q)


def test_to_sibling_keeps_removed_set():
    mis = forced_state(
        [iv(1, 10, 20), iv(2, 2, 12), iv(3, 4, 11), iv(4, 15, 30), iv(5, 22, 28)],
        {1, 4},
    )
    left = mis.find_alternating_path("left", 2, None, Fraction(10))
    if left is not None:
        sib = mis.to_sibling(left)
        assert [x.id for x in sib[0]] == [x.id for x in left[0]]
        # added set now minimizes right endpoints sweeping left to right
        for old, new in zip(left[1], sib[1]):
            assert new.r <= old.r


def test_merge_trivials():
    a = IntervalMis(k=2)
    a.insert(iv(1, 0, 1))
    b = IntervalMis(k=2)
    d = a.merge(b, Fraction(5))
    assert d.entries == [] and member_ids(a) == {1}

    far_a = IntervalMis(k=2)
    far_a.insert(iv(1, 0, 1))
    far_b = IntervalMis(k=2)
    far_b.insert(iv(2, 100, 101))
    d = far_a.merge(far_b, Fraction(50))
    assert d.entries == []
    assert member_ids(far_a) == {1, 2}
    assert far_a.verify_k_valid()


def test_merge_overlapping_members():
    a = IntervalMis(k=2)
    a.insert(iv(1, 1, 5))
    b = IntervalMis(k=2)
    b.insert(iv(2, 4, 8))
    a.merge(b, Fraction(3))
    assert a.verify_k_valid()
    assert len(member_ids(a)) == 1


def test_split_trivials():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 5, 6))
    d, right = mis.split(Fraction(0))
    assert d.entries == [] and len(mis.members()) == 0
    assert member_ids(right) == {1}
    assert right.verify_k_valid()


def test_split_crossing_lands_left():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 10))
    mis.insert(iv(2, 2, 3))
    mis.insert(iv(3, 6, 7))
    d, right = mis.split(Fraction(4))
    assert {x.id for x in mis.S.items_by_l()} == {1, 2}
    assert {x.id for x in right.S.items_by_l()} == {3}
    assert mis.verify_k_valid() and right.verify_k_valid()
    d2 = mis.merge(right, Fraction(4))
    assert mis.verify_k_valid()


def test_clip_examples():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 3))
    d = mis.clip(Fraction(5))
    assert d.entries == []
    assert member_ids(mis) == {1}

    forced = forced_state([iv(1, 0, 9), iv(2, 5, 6)], {1})
    d = forced.clip(Fraction(7))
    assert sorted(d.entries) == [("add", 2), ("remove", 1)]
    assert member_ids(forced) == {2}
    stored = forced.by_id[1]
    assert stored.r < 7 and forced.verify_k_valid()


def test_clip_precondition():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 3))
    with pytest.raises(PreconditionError):
        mis.clip(Fraction(0))


def test_extend():
    mis = IntervalMis(k=2)
    mis.insert(iv(1, 0, 10))
    mis.insert(iv(2, 2, 3))
    assert member_ids(mis) == {2}
    mis.extend(iv(1, 0, 10), iv(1, 0, 12))
    assert member_ids(mis) == {2}
    assert mis.verify_k_valid()
    with pytest.raises(PreconditionError):
        mis.extend(iv(2, 2, 3), iv(2, 1, 4))  # member
    with pytest.raises(MembershipError):
        mis.extend(iv(9, 0, 1), iv(9, 0, 2))


def test_extend_to_touch_members():
    mis = IntervalMis(k=3)
    for x in [iv(1, 0, 2), iv(2, 10, 12), iv(3, 4, 5)]:
        mis.insert(x)
    assert member_ids(mis) == {1, 2, 3}
    mis.insert(iv(4, 3, 6))  # swallowed later
    mis.delete(iv(3, 4, 5))
    assert mis.verify_k_valid()
    grown = [x for x in mis.S.items_by_l() if x.id == 4][0]
    if 4 not in member_ids(mis):
        mis.extend(iv(4, grown.l, grown.r), iv(4, 1, 11))
        assert mis.verify_k_valid()


def fuzz_run(seed, k, steps=220, span=200, max_live=40, check_every=1):
    rng = random.Random(seed)
    mis = IntervalMis(k=k, seed=seed)
    live = {}
    reported = set()
    next_id = 0
    for step in range(steps):
        if live and (len(live) >= max_live or rng.random() < 0.45):
            victim = live.pop(rng.choice(list(live)))
            d = mis.delete(victim)
        else:
            a = rng.randint(0, span)
            x = iv(next_id, a, a + rng.randint(1, span // 4))
            next_id += 1
            live[x.id] = x
            d = mis.insert(x)
        assert len(d) <= 2 * (2 * k + 1) + 4
        d.apply_to(reported)
        assert reported == member_ids(mis)
        if step % check_every == 0:
            assert mis.verify_k_valid(), f"seed={seed} k={k} step={step}"
            opt, _ = oracle.exact_intervals(mis.S.items_by_l())
            assert 2 * len(mis.members()) >= opt
    return mis


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_fuzz_updates_stay_k_valid(k):
    for seed in (1, 2, 3):
        fuzz_run(seed * 100 + k, k)


def test_fuzz_structural_ops():
    rng = random.Random(77)
    for trial in range(30):
        k = rng.choice([1, 2, 3])
        mis = fuzz_run(5000 + trial, k, steps=60, check_every=7)
        t = Fraction(rng.randint(-10, 220))
        d, right = mis.split(t)
        assert mis.verify_k_valid() and right.verify_k_valid()
        assert all(x.l <= t for x in mis.S.items_by_l())
        assert all(x.l > t for x in right.S.items_by_l())
        mis.merge(right, t)
        assert mis.verify_k_valid()
        mx = mis.S.max_by_l()
        if mx is not None:
            c = mx.l + rng.randint(1, 40)
            mis.clip(Fraction(c))
            assert mis.verify_k_valid()
            assert all(x.r < c or x.l > c for x in mis.S.items_by_l())
