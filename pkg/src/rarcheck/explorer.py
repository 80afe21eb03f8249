"""Bounded exhaustive exploration of the interpreted semantics."""

from __future__ import annotations

import hashlib
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .assertions import (
    StateFacts,
    audit_initial,
    check_agreement,
    check_state_lemmas,
    check_transition_lemmas,
    eval_assertion,
    rule_audit,
)
from .core import C11State, Event, initial_state, last_write, ra_step
from .lang import TAU, LitmusSpec, Program, program_steps
from .validity import PreExecution, check_validity, pe_successors  # noqa: F401  (re-exported)


@dataclass(frozen=True)
class Configuration:
    program: Program
    state: C11State

    @property
    def is_final(self) -> bool:
        return self.program.is_final


@dataclass(frozen=True)
class TransitionLabel:
    tid: int
    observed: Optional[Event] = None
    event: Optional[Event] = None  # None is the silent step

    def __str__(self) -> str:
        if self.event is None:
            return f"t{self.tid}: tau"
        return f"t{self.tid}: {self.event} observing {self.observed}"


def initial(spec: LitmusSpec) -> Configuration:
    return Configuration(spec.program, initial_state(spec.init))


def successors(c: Configuration) -> list[tuple[TransitionLabel, Configuration]]:
    """All transitions, ordered by thread id then observed-write tag."""
    out = []
    for step in program_steps(c.program):
        tmpl = step.template
        if tmpl.kind == TAU:
            out.append((TransitionLabel(step.tid), Configuration(step.resume(), c.state)))
            continue
        for m in ra_step(c.state, step.tid, tmpl):
            value = m.event.rdval if m.event.rdval is not None else 0
            out.append(
                (
                    TransitionLabel(step.tid, m.observed, m.event),
                    Configuration(step.resume(value), m.state),
                )
            )
    return out


def canonical_key(c: Configuration):
    """Structural identity of a configuration; equal keys iff equal configs."""
    s = c.state
    return (c.program, s.events, s.rf, s.mo, s.sb)


def fingerprint(c: Configuration) -> str:
    """Stable hex digest of a configuration, independent of hash seeding."""
    s = c.state
    text = repr((c.program, s.events, sorted(s.sb), sorted(s.rf), s.mo))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    scope: str
    assertion: object
    trace: list[TransitionLabel]
    message: str = ""


@dataclass
class ExplorationResult:
    states: int = 0
    transitions: int = 0
    truncated: bool = False
    violations: list[Violation] = field(default_factory=list)
    outcomes: set[tuple[tuple[str, int], ...]] = field(default_factory=set)
    witnesses: list[tuple[object, list[TransitionLabel]]] = field(default_factory=list)
    keys: Optional[set] = None
    audit_counts: Counter = field(default_factory=Counter)
    audit_violations: list = field(default_factory=list)
    oracle_failures: list[str] = field(default_factory=list)
    final_states: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations and not self.audit_violations and not self.oracle_failures


@dataclass
class Checks:
    """Optional oracles run during exploration."""

    validity: bool = False
    lemmas: bool = False
    audit: bool = False

    @classmethod
    def all(cls) -> Checks:
        return cls(True, True, True)


def outcome(state: C11State, variables) -> tuple[tuple[str, int], ...]:
    return tuple((x, last_write(state, x).wrval) for x in variables)


def explore(
    spec: LitmusSpec,
    max_events: Optional[int] = None,
    mode: str = "bfs",
    *,
    checks: Optional[Checks] = None,
    extra_always: tuple = (),
    dedup: bool = True,
    keep_keys: bool = False,
    on_state: Optional[Callable[[Configuration], None]] = None,
) -> ExplorationResult:
    """Visit every configuration within ``max_events`` non-initialising events.

    ``extra_always`` adds assertions checked at every state without being
    part of the litmus file.  With ``dedup=False`` the search tree is walked
    without a visited set; only sensible for tiny bounds.
    """
    if max_events is None:
        max_events = spec.bound
    if max_events is None or max_events < 1:
        raise ValueError("a positive event bound is required")
    if mode not in ("bfs", "dfs"):
        raise ValueError(f"unknown mode {mode!r}")
    checks = checks or Checks()
    tids = spec.tids
    variables = spec.variables
    always = [a for s, a in spec.assertions if s == "always"] + list(extra_always)
    finally_ = [a for s, a in spec.assertions if s == "finally"]
    reachable = [a for s, a in spec.assertions if s == "reachable"]
    pending_reach = list(range(len(reachable)))
    res = ExplorationResult()
    if keep_keys or not dedup:
        res.keys = set()

    start = initial(spec)
    parent: dict = {}
    facts_cache: dict = {}

    def trace_to(key) -> list[TransitionLabel]:
        path = []
        while True:
            entry = parent.get(key)
            if entry is None:
                break
            key, label = entry
            path.append(label)
        return list(reversed(path))

    def facts(state: C11State) -> StateFacts:
        f = facts_cache.get(state)
        if f is None:
            f = StateFacts(state, tids, variables)
            facts_cache[state] = f
        return f

    def visit(c: Configuration, path: Optional[list]) -> None:
        res.states += 1
        if on_state is not None:
            on_state(c)
        key = canonical_key(c)
        if res.keys is not None:
            res.keys.add(key)
        get_trace = (lambda: list(path)) if path is not None else (lambda: trace_to(key))
        for a in always:
            if not eval_assertion(c, a) and not any(v.assertion is a for v in res.violations):
                res.violations.append(Violation("always", a, get_trace()))
        for i in list(pending_reach):
            if eval_assertion(c, reachable[i]):
                pending_reach.remove(i)
                res.witnesses.append((reachable[i], get_trace()))
        if c.is_final:
            res.final_states += 1
            res.outcomes.add(outcome(c.state, variables))
            for a in finally_:
                if not eval_assertion(c, a) and not any(v.assertion is a for v in res.violations):
                    res.violations.append(Violation("finally", a, get_trace()))

    def check_state(c: Configuration) -> None:
        s = c.state
        if checks.validity:
            rep = check_validity(s)
            if not rep.ok:
                res.oracle_failures.append(f"validity {rep.failed()} at {fingerprint(c)}")
        if checks.lemmas:
            for f in check_state_lemmas(s, tids, variables) + check_agreement(facts(s)):
                res.oracle_failures.append(f"{f.lemma}: {f.detail}")

    def check_transition(c: Configuration, label: TransitionLabel, nxt: Configuration) -> None:
        if label.event is None:
            return
        pre = facts(c.state)
        if checks.lemmas:
            for f in check_transition_lemmas(c.state, label.observed, label.event, pre):
                res.oracle_failures.append(f"{f.lemma}: {f.detail}")
        if checks.audit:
            recs = rule_audit(
                c.state, label.observed, label.event, nxt.state, tids, variables,
                pre=pre, post=facts(nxt.state),
            )
            for r in recs:
                res.audit_counts[r.rule] += 1
                if r.violation:
                    res.audit_violations.append(r)

    if checks.audit:
        for r in audit_initial(start.state, tids, variables):
            res.audit_counts[r.rule] += 1
            if r.violation:
                res.audit_violations.append(r)

    checked_states: set = set()

    def expand(c: Configuration) -> list[tuple[TransitionLabel, Configuration]]:
        succ = successors(c)
        at_bound = c.state.size >= max_events
        out = []
        for label, nxt in succ:
            if label.event is not None and at_bound:
                res.truncated = True
                continue
            res.transitions += 1
            if label.event is not None and (checks.lemmas or checks.audit):
                check_transition(c, label, nxt)
            out.append((label, nxt))
        return out

    def state_once(c: Configuration) -> None:
        if checks.validity or checks.lemmas:
            if c.state not in checked_states:
                checked_states.add(c.state)
                check_state(c)

    if not dedup:
        stack = [(start, [])]
        while stack:
            c, path = stack.pop()
            visit(c, path)
            state_once(c)
            for label, nxt in reversed(expand(c)):
                stack.append((nxt, path + [label]))
        _finish(res, reachable, pending_reach)
        return res

    seen = {canonical_key(start)}
    frontier: deque = deque([start])
    pop = frontier.popleft if mode == "bfs" else frontier.pop
    while frontier:
        c = pop()
        visit(c, None)
        state_once(c)
        key = canonical_key(c)
        nexts = expand(c)
        if mode == "dfs":
            nexts = list(reversed(nexts))
        for label, nxt in nexts:
            k = canonical_key(nxt)
            if k in seen:
                continue
            seen.add(k)
            parent[k] = (key, label)
            frontier.append(nxt)
        if len(facts_cache) > 50_000:
            facts_cache.clear()
    _finish(res, reachable, pending_reach)
    return res


def _finish(res: ExplorationResult, reachable, pending) -> None:
    for i in pending:
        res.violations.append(
            Violation("reachable", reachable[i], [], "no visited state satisfies it")
        )
