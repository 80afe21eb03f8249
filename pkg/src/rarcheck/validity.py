"""Axiomatic checks on candidate executions, enumeration and replay.

``check_validity`` evaluates the five validity axioms; ``check_weak_canonical``
evaluates the irreflexivity conditions of the weak canonical model using its
own compositions (it never looks at ``fr`` or ``eco``), so the two checkers
are independent routes to the same verdict.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence, Union

from .core import (
    C11State,
    Event,
    Relations,
    Tag,
    bits_of,
    canonical_sb,
    closure,
    compose,
    identity,
    initial_state,
    inverse,
    ra_step,
    reflexive_points,
    restrict,
)
from .lang import READ_KINDS, TAU, LitmusSpec, Program, program_steps

CandidateExecution = C11State

VALIDITY_AXIOMS = ("SB-Total", "MO-Valid", "RF-Complete", "No-Thin-Air", "Coherence")
WEAK_CANONICAL_AXIOMS = ("HB", "COH", "RF", "RFI", "UPD")


@dataclass(frozen=True)
class AxiomResult:
    name: str
    ok: bool
    witness: tuple = ()
    detail: str = ""


@dataclass(frozen=True)
class AxiomReport:
    results: tuple[AxiomResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    def __getitem__(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [r.name for r in self.results if not r.ok]


# ---------------------------------------------------------------------------
# Decision kernels
#
# Both checkers reduce to these bit-row routines.  ``check_validity`` and
# ``check_weak_canonical`` call them on a state's relations; the equivalence
# sweep calls them directly on enumerated rows.  Rows are indexed by events
# in tag order; ``rf_inv`` is the inverse of ``rf``.
# ---------------------------------------------------------------------------


_TABLE_BITS = 12
_BIT_TABLE = tuple(
    tuple(i for i in range(_TABLE_BITS) if m >> i & 1) for m in range(1 << _TABLE_BITS)
)


class _Bits:
    """Set-bit indices of a mask, computed on demand for wide states."""

    def __getitem__(self, mask: int) -> tuple[int, ...]:
        return tuple(bits_of(mask))


_BITS_ANY = _Bits()


def coherence_holds(n: int, hb, rf, rf_inv, mo) -> bool:
    """hb;eco? and eco irreflexive, with eco = (fr ∪ mo ∪ rf)+."""
    T = _BIT_TABLE if n <= _TABLE_BITS else _BITS_ANY
    rows = [0] * n
    for i in range(n):
        acc = 0
        for j in T[rf_inv[i]]:
            acc |= mo[j]
        rows[i] = (acc & ~(1 << i)) | mo[i] | rf[i]
    for k in range(n):
        rk = rows[k]
        if rk:
            bk = 1 << k
            for i in range(n):
                if rows[i] & bk:
                    rows[i] |= rk
    for i in range(n):
        bi = 1 << i
        if rows[i] & bi or hb[i] & bi:
            return False
        for j in T[hb[i]]:
            if rows[j] & bi:
                return False
    return True


def weak_canonical_holds(n: int, hb, rf, rf_inv, mo) -> bool:
    """HB, COH, RF, RFI and UPD irreflexivity, composed directly."""
    T = _BIT_TABLE if n <= _TABLE_BITS else _BITS_ANY
    for i in range(n):
        bi = 1 << i
        if hb[i] & bi or rf[i] & bi:
            return False
        for j in T[rf[i]]:
            if hb[j] & bi:
                return False
    for i in range(n):
        bi = 1 << i
        # (rf^-1)? ; mo ; rf? ; hb
        s = mo[i]
        for j in T[rf_inv[i]]:
            s |= mo[j]
        t = s
        for j in T[s]:
            t |= rf[j]
        for j in T[t]:
            if hb[j] & bi:
                return False
        # (mo ; mo ; rf^-1) ∪ (mo ; rf)
        mm = 0
        mr = 0
        for j in T[mo[i]]:
            mm |= mo[j]
            mr |= rf[j]
        if mr & bi:
            return False
        for j in T[mm]:
            if rf_inv[j] & bi:
                return False
    return True


# ---------------------------------------------------------------------------
# Witness helpers
# ---------------------------------------------------------------------------


def _shortest_cycle(rows: Sequence[int], start: int) -> Optional[list[int]]:
    """Shortest cycle through ``start`` by BFS; successors in index order."""
    parent = {start: -1}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j in bits_of(rows[i]):
            if j == start:
                path = [i]
                while parent[path[-1]] != -1:
                    path.append(parent[path[-1]])
                return list(reversed(path))
            if j not in parent:
                parent[j] = i
                queue.append(j)
    return None


def _least_cycle(rows: Sequence[int]) -> Optional[list[int]]:
    """Shortest cycle through the least event lying on any cycle."""
    closed = closure(rows)
    for i in range(len(rows)):
        if closed[i] >> i & 1:
            return _shortest_cycle(rows, i)
    return None


def _tags(r: Relations, idx: Iterable[int]) -> tuple[Tag, ...]:
    return tuple(r.events[i].tag for i in idx)


# ---------------------------------------------------------------------------
# Validity
# ---------------------------------------------------------------------------


def _sb_total(state: C11State) -> AxiomResult:
    evs = state.events
    sb = state.sb
    tags = {e.tag for e in evs}
    for a, b in sorted(sb):
        if a not in tags or b not in tags:
            return AxiomResult("SB-Total", False, (a, b), "sb relates unknown events")
    for a in evs:
        for b in evs:
            ab = (a.tag, b.tag) in sb
            if a.tid == 0 and b.tid != 0 and not ab:
                return AxiomResult(
                    "SB-Total", False, (a.tag, b.tag), "initialiser not sb-first"
                )
            if ab and a.tid != 0 and a.tid != b.tid:
                return AxiomResult(
                    "SB-Total", False, (a.tag, b.tag), "sb crosses threads"
                )
            if ab and b.tid == 0:
                return AxiomResult(
                    "SB-Total", False, (a.tag, b.tag), "sb into an initialiser"
                )
    # strict total order on each thread
    by_tid: dict[int, list[Event]] = {}
    for e in evs:
        if e.tid != 0:
            by_tid.setdefault(e.tid, []).append(e)
    for tid, es in sorted(by_tid.items()):
        for a in es:
            if (a.tag, a.tag) in sb:
                return AxiomResult("SB-Total", False, (a.tag, a.tag), "sb reflexive")
            for b in es:
                if a is b:
                    continue
                ab = (a.tag, b.tag) in sb
                ba = (b.tag, a.tag) in sb
                if ab == ba:
                    why = "sb not total" if not ab else "sb not antisymmetric"
                    return AxiomResult("SB-Total", False, (a.tag, b.tag), why)
                for c in es:
                    if ab and (b.tag, c.tag) in sb and (a.tag, c.tag) not in sb:
                        return AxiomResult(
                            "SB-Total", False, (a.tag, c.tag), "sb not transitive"
                        )
    return AxiomResult("SB-Total", True)


def _mo_valid(state: C11State) -> AxiomResult:
    by_tag = state.by_tag
    seen: set[Tag] = set()
    for var, seq in state.mo:
        for t in seq:
            if t not in by_tag:
                return AxiomResult("MO-Valid", False, (t,), "mo names unknown event")
            e = by_tag[t]
            if not e.is_write:
                return AxiomResult("MO-Valid", False, (t,), "mo orders a non-write")
            if e.var != var:
                return AxiomResult("MO-Valid", False, (t,), f"write to {e.var} in mo[{var}]")
            if t in seq[: seq.index(t)] or t in seen:
                return AxiomResult("MO-Valid", False, (t, t), "mo not strict")
            seen.add(t)
        for i, t in enumerate(seq):
            if by_tag[t].tid == 0 and i != 0:
                return AxiomResult(
                    "MO-Valid", False, (seq[0], t), "initialiser not mo-first"
                )
    for e in state.events:
        if e.is_write and e.tag not in seen:
            return AxiomResult("MO-Valid", False, (e.tag,), "write missing from mo")
    return AxiomResult("MO-Valid", True)


def _rf_complete(state: C11State) -> AxiomResult:
    by_tag = state.by_tag
    sources: dict[Tag, list[Tag]] = {}
    for w, r in sorted(state.rf):
        if w not in by_tag or r not in by_tag:
            return AxiomResult("RF-Complete", False, (w, r), "rf names unknown event")
        we, re_ = by_tag[w], by_tag[r]
        if not we.is_write or not re_.is_read:
            return AxiomResult("RF-Complete", False, (w, r), "rf not write-to-read")
        if we.var != re_.var:
            return AxiomResult("RF-Complete", False, (w, r), "rf variable mismatch")
        if we.wrval != re_.rdval:
            return AxiomResult("RF-Complete", False, (w, r), "rf value mismatch")
        sources.setdefault(r, []).append(w)
    for e in state.events:
        if e.is_read:
            n = len(sources.get(e.tag, ()))
            if n != 1:
                why = "read has no rf source" if n == 0 else "read has several rf sources"
                return AxiomResult("RF-Complete", False, (e.tag,), why)
    return AxiomResult("RF-Complete", True)


def _no_thin_air(r: Relations) -> AxiomResult:
    rows = [a | b for a, b in zip(r.sb, r.rf)]
    cyc = _least_cycle(rows)
    if cyc is None:
        return AxiomResult("No-Thin-Air", True)
    return AxiomResult("No-Thin-Air", False, _tags(r, cyc), "sb ∪ rf cycle")


def _coherence(r: Relations) -> AxiomResult:
    if coherence_holds(r.n, r.hb, r.rf, r.rf_inv, r.mo):
        return AxiomResult("Coherence", True)
    base = [a | b | c for a, b, c in zip(r.fr, r.mo, r.rf)]
    for i in range(r.n):
        if r.eco[i] >> i & 1:
            return AxiomResult(
                "Coherence", False, _tags(r, _shortest_cycle(base, i)), "eco reflexive"
            )
    eco_opt = [row | 1 << i for i, row in enumerate(r.eco)]
    hb_eco = compose(r.hb, eco_opt)
    for i in reflexive_points(hb_eco):
        for j in bits_of(r.hb[i]):
            if eco_opt[j] >> i & 1:
                return AxiomResult(
                    "Coherence", False, _tags(r, (i, j)), "hb;eco? reflexive"
                )
    raise AssertionError("coherence kernel and witness search disagree")


def _well_formed(state: C11State) -> bool:
    tags = state.by_tag
    if any(a not in tags or b not in tags for a, b in state.sb | state.rf):
        return False
    return all(t in tags for _, seq in state.mo for t in seq)


def check_validity(state: C11State) -> AxiomReport:
    results = [_sb_total(state), _mo_valid(state), _rf_complete(state)]
    if _well_formed(state):
        r = state.rel
        results += [_no_thin_air(r), _coherence(r)]
    else:
        results += [
            AxiomResult(name, False, (), "relations name unknown events")
            for name in ("No-Thin-Air", "Coherence")
        ]
    return AxiomReport(tuple(results))


def is_candidate(state: C11State) -> bool:
    """SB-Total, MO-Valid and RF-Complete: the shape of a candidate execution."""
    return _sb_total(state).ok and _mo_valid(state).ok and _rf_complete(state).ok


class NotACandidate(ValueError):
    pass


def check_weak_canonical(state: C11State, *, require_candidate: bool = True) -> AxiomReport:
    if require_candidate and not is_candidate(state):
        raise NotACandidate("weak canonical consistency is defined on candidate executions")
    r = state.rel
    n = r.n
    ident = identity(n)
    rf, mo, hb = r.rf, r.mo, r.hb
    rf_inv = inverse(rf)
    rf_inv_opt = [a | b for a, b in zip(ident, rf_inv)]
    rf_opt = [a | b for a, b in zip(ident, rf)]

    def result(name: str, rows: list[int], pieces: str) -> AxiomResult:
        pts = reflexive_points(rows)
        if not pts:
            return AxiomResult(name, True)
        return AxiomResult(name, False, (r.events[pts[0]].tag,), f"irrefl({pieces}) fails")

    if weak_canonical_holds(n, hb, rf, rf_inv, mo):
        return AxiomReport(tuple(AxiomResult(name, True) for name in WEAK_CANONICAL_AXIOMS))
    coh = compose(compose(compose(rf_inv_opt, mo), rf_opt), hb)
    upd = [
        a | b
        for a, b in zip(compose(compose(mo, mo), rf_inv), compose(mo, rf))
    ]
    report = AxiomReport(
        (
            result("HB", hb, "hb"),
            result("COH", coh, "(rf^-1)?;mo;rf?;hb"),
            result("RF", compose(rf, hb), "rf;hb"),
            result("RFI", rf, "rf"),
            result("UPD", upd, "(mo;mo;rf^-1) ∪ (mo;rf)"),
        )
    )
    if report.ok:
        raise AssertionError("weak canonical kernel and per-axiom evaluation disagree")
    return report


# ---------------------------------------------------------------------------
# Candidate enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PreExecution:
    program: Program
    events: tuple[Event, ...]  # in tag order, so interleavings coincide

    @property
    def size(self) -> int:
        return sum(1 for e in self.events if e.tid != 0)


def pe_successors(
    pe: PreExecution, domain: Iterable[int]
) -> list[tuple[Optional[Event], PreExecution]]:
    """Pre-execution steps: reads take every value of ``domain``."""
    values = sorted(set(domain))
    out: list[tuple[Optional[Event], PreExecution]] = []
    for step in program_steps(pe.program):
        tmpl = step.template
        if tmpl.kind == TAU:
            out.append((None, PreExecution(step.resume(), pe.events)))
            continue
        index = sum(1 for e in pe.events if e.tid == step.tid)
        choices = values if tmpl.kind in READ_KINDS else [None]
        for v in choices:
            e = Event(step.tid, index, tmpl.kind, tmpl.var, rdval=v, wrval=tmpl.wrval)
            out.append((e, PreExecution(step.resume(0 if v is None else v), tuple(sorted(pe.events + (e,))))))
    return out


@dataclass(frozen=True)
class Candidate:
    """A valid candidate execution; ``complete`` iff the program finished."""

    execution: C11State
    complete: bool


class _Truncated:
    def __repr__(self) -> str:
        return "TRUNCATED"


TRUNCATED = _Truncated()


def pre_executions(
    spec: LitmusSpec, max_events: int, domain: Iterable[int]
) -> tuple[dict[tuple[Event, ...], bool], bool]:
    """Maximal pre-executions within the bound.

    Returns a map from event tuples to whether the program completed, plus a
    truncation flag.  A pre-execution is maximal when the program is final
    or has used up the event bound.
    """
    domain = sorted(set(domain))
    start = PreExecution(spec.program, initial_state(spec.init).events)
    seen = {start}
    queue = deque([start])
    maximal: dict[tuple[Event, ...], bool] = {}
    truncated = False
    while queue:
        pe = queue.popleft()
        if pe.program.is_final:
            maximal[pe.events] = True
            continue
        at_bound = pe.size >= max_events
        moved = False
        for e, nxt in pe_successors(pe, domain):
            if e is not None and at_bound:
                truncated = True
                continue
            moved = True
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
        if at_bound and not moved:
            maximal.setdefault(pe.events, False)
        elif not moved:
            # stuck without being final cannot happen for this language
            maximal.setdefault(pe.events, False)
    return maximal, truncated


def justifications(events: Sequence[Event]) -> Iterator[C11State]:
    """All (rf, mo) choices for a pre-execution that satisfy RF-Complete and
    MO-Valid, with sb induced by tags."""
    evs = sorted(events, key=lambda e: e.tag)
    sb = frozenset(canonical_sb(evs))
    reads = [e for e in evs if e.is_read]
    writes = [e for e in evs if e.is_write]
    rf_choices = []
    for r in reads:
        srcs = [w for w in writes if w.var == r.var and w.wrval == r.rdval]
        if not srcs:
            return
        rf_choices.append([(w.tag, r.tag) for w in srcs])
    variables = sorted({e.var for e in evs})
    mo_choices = []
    for x in variables:
        inits = [w.tag for w in writes if w.var == x and w.tid == 0]
        rest = [w.tag for w in writes if w.var == x and w.tid != 0]
        mo_choices.append([(x, tuple(inits) + p) for p in itertools.permutations(rest)])
    for rf in itertools.product(*rf_choices):
        rf_set = frozenset(rf)
        for mo in itertools.product(*mo_choices):
            yield C11State(tuple(evs), sb, rf_set, tuple(mo))


def enumerate_candidates(
    spec: LitmusSpec, max_events: int
) -> Iterator[Union[Candidate, _Truncated]]:
    """Valid candidates of ``spec`` within ``max_events`` events.

    Reads range over the program's literals and initial values.  Values that
    the program computes beyond those are added round by round, so a read is
    never denied a value some write in this bound can produce.  sb ∪ rf is
    acyclic in a valid candidate, so each written value depends on a chain of
    at most ``max_events`` earlier writes and that many rounds suffice even
    when the values never reach a fixpoint.  Ends with ``TRUNCATED`` if the
    bound cut off some pre-execution.
    """
    domain = spec.value_domain()
    for _ in range(max_events + 1):
        maximal, truncated = pre_executions(spec, max_events, domain)
        written = {e.wrval for evs in maximal for e in evs if e.is_write}
        if written <= domain:
            break
        domain |= written
    seen: set[C11State] = set()
    for events in sorted(maximal, key=_events_key):
        complete = maximal[events]
        for cand in justifications(events):
            if cand in seen:
                continue
            if check_validity(cand).ok:
                seen.add(cand)
                yield Candidate(cand, complete)
    if truncated:
        yield TRUNCATED


def _events_key(events: tuple[Event, ...]):
    return [(e.tid, e.index, e.kind, e.var, e.rdval or 0, e.wrval or 0) for e in events]


# ---------------------------------------------------------------------------
# Linearization and replay
# ---------------------------------------------------------------------------


class LinearizationError(ValueError):
    def __init__(self, cycle: Sequence[Tag]):
        super().__init__(f"sb ∪ rf has a cycle through {list(cycle)}")
        self.cycle = tuple(cycle)


def linearize(state: C11State) -> list[Event]:
    """Topological order of sb ∪ rf over the non-initialising events."""
    evs = [e for e in state.events if e.tid != 0]
    tags = {e.tag for e in evs}
    succ: dict[Tag, set[Tag]] = {t: set() for t in tags}
    indeg = {t: 0 for t in tags}
    for a, b in state.sb | state.rf:
        if a in tags and b in tags and b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    heap = [t for t in tags if indeg[t] == 0]
    heapq.heapify(heap)
    order: list[Event] = []
    while heap:
        t = heapq.heappop(heap)
        order.append(state[t])
        for b in succ[t]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, b)
    if len(order) != len(evs):
        r = state.rel
        rows = [a | b for a, b in zip(r.sb, r.rf)]
        cyc = _least_cycle(rows) or []
        raise LinearizationError(_tags(r, cyc))
    return order


@dataclass
class ReplayResult:
    ok: bool
    trace: list = field(default_factory=list)  # list of (Program, C11State)
    failed_index: Optional[int] = None
    reason: str = ""

    @property
    def final(self) -> Optional[C11State]:
        return self.trace[-1][1] if self.trace else None


def _expected_observed(target: C11State, e: Event, done: set[Tag]) -> Optional[Tag]:
    """Observed write for ``e`` as dictated by the target's rf and mo."""
    if e.is_read:
        srcs = [w for w, r in target.rf if r == e.tag]
        return srcs[0] if len(srcs) == 1 else None
    seq = target.mo_map[e.var]
    k = seq.index(e.tag)
    for t in reversed(seq[:k]):
        if t in done or t[0] == 0:
            return t
    return None


def replay(
    spec: LitmusSpec,
    target: C11State,
    order: Optional[Sequence[Event]] = None,
    *,
    max_silent: int = 10_000,
) -> ReplayResult:
    """Drive the interpreted semantics through ``order`` towards ``target``.

    At each event the acting thread first takes its silent steps, then must
    offer a step matching the event whose observed write agrees with the
    target's rf and mo.  Every intermediate state must equal the target
    restricted to the events executed so far.
    """
    if order is None:
        order = linearize(target)
    program = spec.program
    state = initial_state(spec.init)
    trace: list = [(program, state)]
    if state != restrict(target, ()):
        return ReplayResult(False, trace, 0, "initial state differs from the target's initialisers")
    done: set[Tag] = set()
    for i, e in enumerate(order):
        steps = 0
        while True:
            step = next((s for s in program_steps(program) if s.tid == e.tid), None)
            if step is None:
                return ReplayResult(False, trace, i, f"thread {e.tid} has finished")
            if step.template.kind != TAU:
                break
            program = step.resume()
            steps += 1
            if steps > max_silent:
                return ReplayResult(False, trace, i, f"thread {e.tid} diverges silently")
        tmpl = step.template
        if tmpl.kind != e.kind or tmpl.var != e.var:
            return ReplayResult(False, trace, i, f"thread offers {tmpl}, wanted {e}")
        want = _expected_observed(target, e, done)
        match = [
            m for m in ra_step(state, e.tid, tmpl)
            if m.observed.tag == want and m.event == e
        ]
        if not match:
            return ReplayResult(False, trace, i, f"no enabled transition produces {e}")
        state = match[0].state
        program = step.resume(e.rdval if e.rdval is not None else 0)
        done.add(e.tag)
        trace.append((program, state))
        if state != restrict(target, done):
            return ReplayResult(False, trace, i, "state differs from the target restriction")
    if state != target:
        return ReplayResult(False, trace, len(order), "final state differs from the target")
    return ReplayResult(True, trace)
