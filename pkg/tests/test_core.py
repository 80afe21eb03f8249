from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import IX, IY, IZ, R3X, R4Z, U1, U4, W2X, W2Y, W3Z
from rarcheck.core import (
    Event,
    covered_writes,
    derived,
    eco_closed_form,
    encountered_writes,
    extend,
    initial_state,
    last_write,
    mo_insert,
    observable_writes,
    ra_step,
    restrict,
)
from rarcheck.lang import ActionTemplate

I = {IX, IY, IZ}


# -- events and states -------------------------------------------------------


def test_event_requires_matching_value_slots():
    with pytest.raises(ValueError):
        Event(1, 0, "rd", "x", None, None)
    with pytest.raises(ValueError):
        Event(1, 0, "wr", "x", 1, 1)
    with pytest.raises(ValueError):
        Event(1, 0, "fence", "x")
    u = Event(1, 0, "updRA", "x", 1, 2)
    assert u.is_read and u.is_write and u.is_release and u.is_acquire


def test_extend_orders_initialisers_and_thread_prefix():
    s = initial_state([("x", 0), ("y", 0), ("z", 0)])
    e1 = Event(1, 0, "wr", "x", None, 1)
    evs, sb = extend(s.events, s.sb, e1)
    assert sb == {((0, i), (1, 0)) for i in range(3)}
    e2 = Event(1, 1, "rd", "y", 0, None)
    evs, sb = extend(evs, sb, e2)
    assert ((1, 0), (1, 1)) in sb
    with pytest.raises(ValueError):
        extend(evs, sb, e2)


def test_initial_state_has_empty_derived_relations():
    s = initial_state([("x", 0), ("y", 1)])
    d = derived(s)
    assert d.sw == d.hb == d.fr == d.eco == frozenset()
    assert eco_closed_form(s) == frozenset()
    assert covered_writes(s) == set()
    for t in (1, 2):
        assert encountered_writes(s, t) == set()
        assert observable_writes(s, t) == set(s.events)


# -- the four-thread example state --------------------------------------------


def test_example2_sw_and_fr(example2):
    d = derived(example2)
    assert (W2X, R3X) in d.sw
    assert (W2X, U1) in d.sw
    assert (R3X, U1) in d.fr
    assert (U4, W2Y) in d.fr
    assert (U4, U4) not in d.fr


def test_example2_relations_match_oracle(example2):
    d = derived(example2)
    o = oracles.relations(example2)
    assert set(d.sw) == o.sw
    assert set(d.hb) == o.hb
    assert set(d.fr) == o.fr
    assert set(d.eco) == o.eco
    assert set(eco_closed_form(example2)) == o.eco


def test_example2_encountered_writes(example2):
    assert encountered_writes(example2, 4) == I | {W3Z, U4}
    assert encountered_writes(example2, 3) == I | {W2Y, W2X, W3Z, U4}
    assert encountered_writes(example2, 2) == I | {W2Y, W2X, U4}
    # wr(y,1) is hb-before the update through wrR(x,2) -sw-> upd(x,2,4),
    # and upd(y,0,5) is mo-before wr(y,1); both therefore count for thread 1
    assert encountered_writes(example2, 1) == I | {W2X, U1, W2Y, U4}
    for t in (1, 2, 3, 4):
        assert encountered_writes(example2, t) == oracles.ew(example2, t)
    assert encountered_writes(example2, 5) == set()


def test_example2_observable_writes(example2):
    assert observable_writes(example2, 3) == {W2Y, W2X, W3Z, U1}
    assert observable_writes(example2, 4) == {IX, W2Y, W2X, W3Z, U1, U4}
    # thread 2's own release write is mo-before nothing it has encountered
    assert observable_writes(example2, 2) == {IZ, W2Y, W3Z, U1, W2X}
    assert observable_writes(example2, 1) == {IZ, W2Y, W3Z, U1}
    for t in (1, 2, 3, 4):
        assert observable_writes(example2, t) == oracles.ow(example2, t)


def test_example2_covered_and_last(example2):
    assert covered_writes(example2) == {IY, W2X}
    assert last_write(example2, "x") == U1
    assert last_write(example2, "y") == W2Y
    assert last_write(example2, "z") == W3Z
    with pytest.raises(KeyError):
        last_write(example2, "q")


def test_no_write_between_update_and_its_source(example2):
    for t in (1, 2, 3, 4, 5):
        for var, blocked in (("x", W2X), ("y", IY)):
            for m in ra_step(example2, t, ActionTemplate("wr", var, 7)):
                assert m.observed != blocked


# -- mo_insert ---------------------------------------------------------------


def _orders_with(seq, w, e):
    """Brute force: total orders on seq+[e] that extend seq and put e right after w."""
    out = []
    for perm in itertools.permutations(list(seq) + [e]):
        if [t for t in perm if t != e] != list(seq):
            continue
        if perm[perm.index(w) + 1 : perm.index(w) + 2] == (e,):
            out.append(perm)
    return out


@pytest.mark.parametrize("pos", [0, 1, 2])
def test_mo_insert_matches_brute_force(pos):
    seq = ((0, 0), (1, 0), (2, 0))
    mo = (("x", seq),)
    w = Event(*seq[pos], "wr", "x", None, 0)
    e = Event(3, 0, "wr", "x", None, 9)
    got = dict(mo_insert(mo, w, e))["x"]
    assert _orders_with(seq, seq[pos], e.tag) == [got]
    if pos == 2:
        assert got[-1] == e.tag


def test_mo_insert_errors():
    mo = (("x", ((0, 0),)), ("y", ((0, 1),)))
    w = Event(0, 0, "wr", "x", None, 0)
    with pytest.raises(ValueError):
        mo_insert(mo, w, Event(1, 0, "wr", "y", None, 1))
    assert dict(mo_insert(mo, w, Event(1, 0, "wr", "x", None, 1)))["x"] == ((0, 0), (1, 0))
    with pytest.raises(ValueError):
        mo_insert(mo, w, w)


# -- event rules: the Peterson state ------------------------------------------


def _only(steps):
    assert len(steps) == 1
    return steps[0].state


@pytest.fixture
def peterson_mid():
    """Thread 1 has set its flag and swapped turn; thread 2 has set its flag."""
    s = initial_state([("flag1", 0), ("flag2", 0), ("turn", 1)])
    s = _only(ra_step(s, 1, ActionTemplate("wr", "flag1", 1)))
    s = _only(ra_step(s, 1, ActionTemplate("updRA", "turn", 2)))
    s = _only(ra_step(s, 2, ActionTemplate("wr", "flag2", 1)))
    return s


def test_update_cannot_read_covered_initialiser(peterson_mid):
    steps = ra_step(peterson_mid, 2, ActionTemplate("updRA", "turn", 1))
    assert [str(m.observed) for m in steps] == ["upd1RA(turn,1,2)"]
    assert steps[0].event.rdval == 2
    assert {str(w) for w in covered_writes(peterson_mid)} == {"wr0(turn,1)"}


def test_plain_read_may_see_covered_initialiser(peterson_mid):
    steps = ra_step(peterson_mid, 2, ActionTemplate("rd", "turn"))
    assert sorted(str(m.observed) for m in steps) == ["upd1RA(turn,1,2)", "wr0(turn,1)"]


def test_after_second_swap(peterson_mid):
    s = _only(ra_step(peterson_mid, 2, ActionTemplate("updRA", "turn", 1)))
    assert {str(w) for w in covered_writes(s)} == {"wr0(turn,1)", "upd1RA(turn,1,2)"}

    def seen(t, x):
        return sorted(str(m.observed) for m in ra_step(s, t, ActionTemplate("rdA", x)))

    assert seen(2, "flag1") == ["wr1(flag1,1)"]
    assert seen(2, "turn") == ["upd2RA(turn,2,1)"]
    assert seen(1, "flag2") == ["wr0(flag2,0)", "wr2(flag2,1)"]
    assert seen(1, "turn") == ["upd1RA(turn,1,2)", "upd2RA(turn,2,1)"]


def test_write_in_initial_state_has_one_result():
    s = initial_state([("x", 0)])
    steps = ra_step(s, 1, ActionTemplate("wr", "x", 5))
    assert len(steps) == 1
    assert steps[0].state.mo_map["x"] == ((0, 0), (1, 0))
    assert steps[0].state.rf == frozenset()


def test_ra_step_rejects_silent_and_thread0():
    s = initial_state([("x", 0)])
    with pytest.raises(ValueError):
        ra_step(s, 1, ActionTemplate("tau", None))
    with pytest.raises(ValueError):
        ra_step(s, 0, ActionTemplate("wr", "x", 1))


# -- properties against the oracle --------------------------------------------

ACTIONS = [("rd", None), ("rdA", None), ("wr", 1), ("wrR", 2), ("updRA", 3)]


def _random_run(seed, length):
    rng = random.Random(seed)
    s = initial_state([("x", 0), ("y", 0)])
    for _ in range(length):
        t = rng.choice([1, 2, 3])
        kind, val = rng.choice(ACTIONS)
        steps = ra_step(s, t, ActionTemplate(kind, rng.choice("xy"), val))
        if steps:
            s = rng.choice(steps).state
    return s


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 6))
def test_ra_step_matches_oracle(seed, length):
    s = _random_run(seed, length)
    for t in (1, 2, 3):
        for kind, val in ACTIONS:
            for x in "xy":
                got = {(m.observed.tag, m.state) for m in ra_step(s, t, ActionTemplate(kind, x, val))}
                assert got == oracles.step(s, t, kind, x, val)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 7))
def test_reachable_state_invariants(seed, length):
    s = _random_run(seed, length)
    covered = covered_writes(s)
    for x in "xy":
        last = last_write(s, x)
        assert last not in covered
        for t in (1, 2, 3):
            assert last in observable_writes(s, t)
    assert set(eco_closed_form(s)) == oracles.eco_cases(s) == set(derived(s).eco)
    assert all(a != b for a, b in derived(s).hb)
    d = derived(s)
    mo = oracles.relations(s).mo
    rf = oracles.relations(s).rf
    for u in (e for e in s.events if e.is_update):
        assert all((u, x) in mo for a, x in d.fr if a == u)
        assert all((x, u) in mo for x, b in rf if b == u)


def test_restrict_keeps_initialisers(example2):
    r = restrict(example2, [W2Y.tag])
    assert {e.tag for e in r.events} == {IX.tag, IY.tag, IZ.tag, W2Y.tag}
    assert r.mo_map["y"] == (IY.tag, W2Y.tag)
    assert r.rf == frozenset()
    assert R4Z not in r.events
