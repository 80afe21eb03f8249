from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from rarcheck.core import Event, make_state
from rarcheck.equiv import sweep
from rarcheck.validity import check_validity, check_weak_canonical


def test_empty_box():
    r = sweep(0, 1, 2)
    assert r.candidates == 1 and r.valued == 2
    assert r.verdicts["both-pass"] == 2
    assert r.ok
    assert sweep(3, 0, 2).candidates == 0


def test_single_event_box():
    # one event on one variable: wr, wrR, rd, rdA, and updRA reading the
    # initialiser or itself
    r = sweep(1, 1, 1)
    assert r.candidates == 1 + 5 + 1
    assert r.verdicts["both-fail"] == 1  # the self-reading update
    assert r.ok


@pytest.mark.parametrize("box", [(2, 1, 2), (2, 2, 2), (3, 1, 2)])
def test_unreduced_sweep_matches_fully_valued_states(box):
    fast = sweep(*box, symmetry=False)
    slow = sweep(*box, symmetry=False, exhaustive_values=True)
    assert fast.ok and slow.ok
    assert fast.valued == slow.valued == slow.candidates
    assert fast.verdicts == slow.verdicts


@pytest.mark.parametrize("box", [(3, 1, 2), (3, 2, 2)])
def test_symmetry_reduction_keeps_agreement(box):
    reduced = sweep(*box)
    full = sweep(*box, symmetry=False)
    assert reduced.ok and full.ok
    assert 0 < reduced.candidates < full.candidates
    assert {k for k in full.verdicts} == {k for k in reduced.verdicts} == {"both-pass", "both-fail"}


def test_report_lines():
    lines = sweep(2, 1, 2).lines()
    assert lines[0] == "box: events <= 2, variables <= 1, values 2"
    assert lines[-1] == "disagreements: 0"


# -- the reductions' premise: verdicts are invariant under renaming ------------------


def _rename(state, tid_map, var_map):
    def tag(t):
        return (tid_map.get(t[0], t[0]), t[1])

    events = [Event(*tag(e.tag), e.kind, var_map[e.var], e.rdval, e.wrval) for e in state.events]
    sb = {(tag(a), tag(b)) for a, b in state.sb}
    rf = {(tag(a), tag(b)) for a, b in state.rf}
    mo = {var_map[x]: [tag(t) for t in seq] for x, seq in state.mo}
    return make_state(events, sb, rf, mo)


def _verdicts(state):
    return check_validity(state)["Coherence"].ok, check_weak_canonical(state).ok


layouts = st.lists(
    st.lists(st.tuples(st.sampled_from(["rd", "rdA", "wr", "wrR", "updRA"]), st.integers(0, 1)), min_size=1, max_size=2),
    min_size=2,
    max_size=3,
)


@settings(max_examples=150, deadline=None)
@given(layouts, st.integers(0, 10**6), st.permutations([1, 2, 3]))
def test_verdicts_invariant_under_renaming(layout, seed, perm):
    s = oracles.random_candidates(layout, 2, random.Random(seed))
    tid_map = dict(zip([1, 2, 3], perm))
    renamed = _rename(s, tid_map, {"v0": "v1", "v1": "v0"})
    assert _verdicts(renamed) == _verdicts(s)


@settings(max_examples=100, deadline=None)
@given(layouts, st.integers(0, 10**6), st.integers(-5, 5))
def test_verdicts_ignore_the_written_values(layout, seed, delta):
    s = oracles.random_candidates(layout, 2, random.Random(seed))
    shifted = [
        Event(
            e.tid, e.index, e.kind, e.var,
            None if e.rdval is None else e.rdval + delta,
            None if e.wrval is None else e.wrval + delta,
        )
        for e in s.events
    ]
    t = make_state(shifted, s.sb, s.rf, dict(s.mo))
    assert _verdicts(t) == _verdicts(s)
