"""End-to-end acceptance criteria.  Each test prints one PASS/FAIL line."""

from __future__ import annotations

import io
import time

import pytest

from conftest import corpus_spec
from rarcheck.assertions import UpdateOnly
from rarcheck.cli import corpus_names, load_state, main
from rarcheck.explorer import Checks, explore, outcome
from rarcheck.validity import TRUNCATED, Candidate, check_validity, enumerate_candidates, replay

PROGRAMS = [n for n in corpus_names() if n.endswith(".lit")]
PETERSON_BOUND = 20
MUTEX = "!(at(1,@L5) && at(2,@L5))"


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return _report


def _run_cli(*argv):
    buf = io.StringIO()
    start = time.perf_counter()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue(), time.perf_counter() - start


class Run:
    """One exploration with every oracle on, plus per-state checks."""

    def __init__(self, name: str):
        self.spec = corpus_spec(name)
        bound = PETERSON_BOUND if name == "peterson.lit" else (self.spec.bound or 16)
        self.states = 0
        self.invalid: list[str] = []
        self.eco_mismatch = 0

        def on_state(c) -> None:
            self.states += 1
            if not check_validity(c.state).ok:
                self.invalid.append(c.state.describe())
            r = c.state.rel
            if r.eco != r.eco_closed:
                self.eco_mismatch += 1

        self.result = explore(self.spec, bound, checks=Checks.all(), on_state=on_state)


@pytest.fixture(scope="module")
def runs():
    return {name: Run(name) for name in PROGRAMS}


def _complete_candidates(spec, bound=8):
    items = list(enumerate_candidates(spec, bound))
    return [c.execution for c in items if isinstance(c, Candidate) and c.complete], items


def test_criterion_01_peterson_mutual_exclusion(report):
    code, out, secs = _run_cli("explore", "peterson.lit", "--max-events", str(PETERSON_BOUND))
    ok = code == 0 and f"PASS assert always {MUTEX}" in out and secs < 300
    report(1, ok, f"explore peterson.lit --max-events {PETERSON_BOUND}: exit {code}, mutex holds, {secs:.1f}s")


def test_criterion_02_peterson_invariants(report, runs):
    run = runs["peterson.lit"]
    invariants = [a for s, a in run.spec.assertions if s == "always" and str(a) != MUTEX]
    failed = [str(v.assertion) for v in run.result.violations if v.assertion in invariants]
    has_update_only = UpdateOnly("turn") in invariants
    ok = len(invariants) == 12 and has_update_only and not failed
    report(2, ok, f"{len(invariants)} invariant assertions over {run.states} states, {len(failed)} violated")


def test_criterion_03_validity_of_visited_states(report, runs):
    visited = sum(r.states for r in runs.values())
    invalid = sum(len(r.invalid) for r in runs.values())
    bundled = check_validity(load_state("example2.json")).ok
    report(3, invalid == 0 and bundled, f"check_validity holds on {visited - invalid}/{visited} visited states")


def test_criterion_04_bounded_replay(report):
    start = time.perf_counter()
    total, failures = 0, []
    for name in ("reordering.lit", "mp.lit", "sb.lit"):
        spec = corpus_spec(name)
        for c in enumerate_candidates(spec, 8):
            if c is TRUNCATED:
                continue
            total += 1
            res = replay(spec, c.execution)
            if not (res.ok and res.final == c.execution):
                failures.append(f"{name}: {res.reason}")
    secs = time.perf_counter() - start
    ok = total > 0 and not failures and secs < 600
    report(4, ok, f"{total - len(failures)}/{total} candidates replayed to their final state, {secs:.1f}s")


def test_criterion_05_message_passing(report, runs):
    mp = runs["mp.lit"].result
    relaxed = runs["mp_relaxed.lit"].result
    finals = {dict(o)["r"] for o in mp.outcomes}
    ok = mp.ok and finals == {5} and mp.final_states > 0 and len(relaxed.witnesses) == 1 and relaxed.ok
    report(5, ok, f"mp: last(r) in {sorted(finals)} at {mp.final_states} final states; relaxed witness found: {bool(relaxed.witnesses)}")


def test_criterion_06_load_buffering(report, runs):
    lb = runs["lb.lit"]
    op = [o for o in lb.result.outcomes if dict(o)["a"] == 1 and dict(o)["b"] == 1]
    cands, items = _complete_candidates(lb.spec)
    ax = [s for s in cands if dict(outcome(s, ["a", "b"])) == {"a": 1, "b": 1}]
    ok = not op and not ax and cands and TRUNCATED not in items and not lb.result.truncated
    report(6, ok, f"a=b=1: {len(op)} explored outcomes, {len(ax)} of {len(cands)} candidates")


def test_criterion_07_store_buffering(report, runs):
    sb = runs["sb.lit"]
    variables = sb.spec.variables
    cands, items = _complete_candidates(sb.spec)
    ax = {outcome(s, variables) for s in cands}
    op = sb.result.outcomes
    both_zero = any(dict(o)["a"] == 0 and dict(o)["b"] == 0 for o in op)
    ok = both_zero and op == ax and TRUNCATED not in items and not sb.result.truncated
    report(7, ok, f"a=b=0 reachable: {both_zero}; {len(op)} explored outcomes, {len(ax)} candidate outcomes, equal: {op == ax}")


def test_criterion_09_eco_closed_form(report, runs):
    visited = sum(r.states for r in runs.values())
    bad = sum(r.eco_mismatch for r in runs.values())
    report(9, bad == 0, f"closed form equals the closure on {visited - bad}/{visited} states")


def test_criterion_10_rule_audit(report, runs):
    counts: dict[str, int] = {}
    violations = []
    for r in runs.values():
        for rule, k in r.result.audit_counts.items():
            counts[rule] = counts.get(rule, 0) + k
        violations += r.result.audit_violations
    exercised = {rule for rule, k in counts.items() if k}
    ok = not violations and {"Init", "ModLast", "Transfer", "UOrd", "NoMod", "AcqRd", "WOrd", "NoModOrd"} <= exercised
    report(10, ok, f"{sum(counts.values())} rule instances, {len(violations)} violations")


def test_criterion_11_lemmas(report, runs):
    failures = [f for r in runs.values() for f in r.result.oracle_failures]
    transitions = sum(r.result.transitions for r in runs.values())
    report(11, not failures, f"{len(failures)} lemma failures over {transitions} transitions")


def test_criterion_08_checker_equivalence(report):
    code, out, secs = _run_cli("equiv", "--max-events", "5", "--vars", "2", "--values", "2")
    ok = code == 0 and "disagreements: 0" in out and secs < 1800
    checked = next(line for line in out.splitlines() if line.startswith("candidates checked"))
    report(8, ok, f"equiv --max-events 5 --vars 2 --values 2: {checked}, 0 disagreements, {secs:.0f}s")
