"""Events, C11 states, derived relations and the event semantics.

Relations are evaluated over an index of the state's events (sorted by tag)
with one Python int per row as a bitset.  Every derived relation is exact;
the closures are plain Warshall.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .lang import (
    ACQUIRE_KINDS,
    RD,
    RDA,
    READ_KINDS,
    RELEASE_KINDS,
    TAU,
    UPD,
    WR,
    WRITE_KINDS,
    WRR,
    ActionTemplate,
)

Tag = tuple[int, int]
Pair = tuple[Tag, Tag]

KINDS = (RD, RDA, WR, WRR, UPD)


@dataclass(frozen=True, order=True)
class Event:
    tid: int
    index: int
    kind: str
    var: str
    rdval: Optional[int] = None
    wrval: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if (self.kind in READ_KINDS) != (self.rdval is not None):
            raise ValueError(f"{self.kind} event must carry rdval iff it reads")
        if (self.kind in WRITE_KINDS) != (self.wrval is not None):
            raise ValueError(f"{self.kind} event must carry wrval iff it writes")

    @property
    def tag(self) -> Tag:
        return (self.tid, self.index)

    @property
    def action(self) -> ActionTemplate:
        return ActionTemplate(self.kind, self.var, self.wrval, self.rdval)

    @property
    def is_init(self) -> bool:
        return self.tid == 0

    @property
    def is_write(self) -> bool:
        return self.kind in WRITE_KINDS

    @property
    def is_read(self) -> bool:
        return self.kind in READ_KINDS

    @property
    def is_update(self) -> bool:
        return self.kind == UPD

    @property
    def is_release(self) -> bool:
        return self.kind in RELEASE_KINDS

    @property
    def is_acquire(self) -> bool:
        return self.kind in ACQUIRE_KINDS

    def __str__(self) -> str:
        t = self.tid
        if self.kind == UPD:
            return f"upd{t}RA({self.var},{self.rdval},{self.wrval})"
        if self.kind == RD:
            return f"rd{t}({self.var},{self.rdval})"
        if self.kind == RDA:
            return f"rd{t}A({self.var},{self.rdval})"
        if self.kind == WRR:
            return f"wr{t}R({self.var},{self.wrval})"
        return f"wr{t}({self.var},{self.wrval})"


def init_event(index: int, var: str, value: int) -> Event:
    return Event(0, index, WR, var, wrval=value)


# ---------------------------------------------------------------------------
# Bitset helpers
# ---------------------------------------------------------------------------


def bits_of(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def closure(rows: Sequence[int]) -> list[int]:
    """Transitive closure of a bit-row relation."""
    out = list(rows)
    n = len(out)
    for k in range(n):
        bk = 1 << k
        rk = out[k]
        if not rk:
            continue
        for i in range(n):
            if out[i] & bk:
                out[i] |= rk
    return out


def compose(a: Sequence[int], b: Sequence[int]) -> list[int]:
    """Relational composition ``a ; b``."""
    out = []
    for row in a:
        acc = 0
        for j in bits_of(row):
            acc |= b[j]
        out.append(acc)
    return out


def inverse(a: Sequence[int]) -> list[int]:
    out = [0] * len(a)
    for i, row in enumerate(a):
        for j in bits_of(row):
            out[j] |= 1 << i
    return out


def union(*rels: Sequence[int]) -> list[int]:
    return [_or(rows) for rows in zip(*rels)]


def _or(rows: Iterable[int]) -> int:
    acc = 0
    for r in rows:
        acc |= r
    return acc


def reflexive_points(rows: Sequence[int]) -> list[int]:
    """Indices i with (i, i) in the relation."""
    return [i for i, row in enumerate(rows) if row >> i & 1]


def identity(n: int) -> list[int]:
    return [1 << i for i in range(n)]


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class C11State:
    """A C11 state ``((D, sb), rf, mo)``.

    ``events`` is sorted by tag, ``sb`` and ``rf`` are sets of tag pairs (rf
    oriented write to read), and ``mo`` holds one tag sequence per variable,
    sorted by variable name.  Equality is structural.
    """

    events: tuple[Event, ...]
    sb: frozenset[Pair]
    rf: frozenset[Pair]
    mo: tuple[tuple[str, tuple[Tag, ...]], ...]

    @cached_property
    def by_tag(self) -> dict[Tag, Event]:
        return {e.tag: e for e in self.events}

    @cached_property
    def rel(self) -> Relations:
        return Relations(self)

    @cached_property
    def mo_map(self) -> dict[str, tuple[Tag, ...]]:
        return dict(self.mo)

    def __getitem__(self, tag: Tag) -> Event:
        return self.by_tag[tag]

    @property
    def init_events(self) -> list[Event]:
        return [e for e in self.events if e.tid == 0]

    def thread_events(self, tid: int) -> list[Event]:
        return [e for e in self.events if e.tid == tid]

    def next_index(self, tid: int) -> int:
        return sum(1 for e in self.events if e.tid == tid)

    @property
    def size(self) -> int:
        """Number of non-initialising events."""
        return sum(1 for e in self.events if e.tid != 0)

    @property
    def variables(self) -> list[str]:
        return sorted({e.var for e in self.events} | set(self.mo_map))

    def mo_pairs(self) -> set[Pair]:
        out = set()
        for _, seq in self.mo:
            for i, a in enumerate(seq):
                for b in seq[i + 1 :]:
                    out.add((a, b))
        return out

    def writes(self) -> list[Event]:
        return [e for e in self.events if e.is_write]

    def reads(self) -> list[Event]:
        return [e for e in self.events if e.is_read]

    def describe(self) -> str:
        lines = ["events: " + ", ".join(str(e) for e in self.events)]
        rf = sorted(self.rf)
        lines.append("rf: " + ", ".join(f"{self[a]}->{self[b]}" for a, b in rf))
        for var, seq in self.mo:
            lines.append(f"mo[{var}]: " + " < ".join(str(self[t]) for t in seq))
        return "\n".join(lines)


def make_state(
    events: Iterable[Event],
    sb: Iterable[Pair],
    rf: Iterable[Pair],
    mo: Mapping[str, Sequence[Tag]],
) -> C11State:
    return C11State(
        tuple(sorted(events, key=lambda e: e.tag)),
        frozenset(sb),
        frozenset(rf),
        tuple(sorted((x, tuple(seq)) for x, seq in mo.items())),
    )


def canonical_sb(events: Iterable[Event]) -> set[Pair]:
    """sb induced by tags: initialisers first, then per-thread index order."""
    evs = sorted(events, key=lambda e: e.tag)
    out = set()
    for a in evs:
        for b in evs:
            if b.tid == 0:
                continue
            if a.tid == 0 or (a.tid == b.tid and a.index < b.index):
                out.add((a.tag, b.tag))
    return out


def initial_state(init: Iterable[tuple[str, int]]) -> C11State:
    """One initialising write per variable, tagged by declaration order."""
    events = [init_event(i, x, v) for i, (x, v) in enumerate(init)]
    return make_state(events, (), (), {e.var: (e.tag,) for e in events})


def extend(
    events: tuple[Event, ...], sb: frozenset[Pair], e: Event
) -> tuple[tuple[Event, ...], frozenset[Pair]]:
    """The pre-execution ``(D, sb) + e``."""
    if any(d.tag == e.tag for d in events):
        raise ValueError(f"tag {e.tag} already present")
    new_sb = set(sb)
    for d in events:
        if d.tid == 0 or d.tid == e.tid:
            new_sb.add((d.tag, e.tag))
    return tuple(sorted(events + (e,), key=lambda d: d.tag)), frozenset(new_sb)


def restrict(state: C11State, keep: Iterable[Tag]) -> C11State:
    """The state restricted to ``keep`` plus the initialising writes."""
    tags = set(keep) | {e.tag for e in state.events if e.tid == 0}
    return C11State(
        tuple(e for e in state.events if e.tag in tags),
        frozenset(p for p in state.sb if p[0] in tags and p[1] in tags),
        frozenset(p for p in state.rf if p[0] in tags and p[1] in tags),
        tuple((x, tuple(t for t in seq if t in tags)) for x, seq in state.mo),
    )


# ---------------------------------------------------------------------------
# Relations
# ---------------------------------------------------------------------------


class Relations:
    """Base and derived relations of a state as bit rows over event indices.

    Row ``r[i]`` has bit ``j`` set iff ``(events[i], events[j])`` is related.
    Pair views (sets of event pairs) are available through ``pairs``.
    """

    def __init__(self, state: C11State):
        self.state = state
        self.events = state.events
        self.n = len(self.events)
        self.index = {e.tag: i for i, e in enumerate(self.events)}
        n = self.n
        idx = self.index
        sb = [0] * n
        for a, b in state.sb:
            sb[idx[a]] |= 1 << idx[b]
        rf = [0] * n
        for a, b in state.rf:
            rf[idx[a]] |= 1 << idx[b]
        mo = [0] * n
        for _, seq in state.mo:
            pos = [idx[t] for t in seq]
            after = 0
            for i in reversed(pos):
                mo[i] |= after
                after |= 1 << i
        self.sb = sb
        self.rf = rf
        self.mo = mo
        self.write_mask = _mask(i for i, e in enumerate(self.events) if e.is_write)
        self.read_mask = _mask(i for i, e in enumerate(self.events) if e.is_read)
        self.update_mask = _mask(i for i, e in enumerate(self.events) if e.is_update)
        self.init_mask = _mask(i for i, e in enumerate(self.events) if e.tid == 0)
        self.acq_mask = _mask(i for i, e in enumerate(self.events) if e.is_acquire)

    # Derived relations -----------------------------------------------------

    @cached_property
    def rf_inv(self) -> list[int]:
        return inverse(self.rf)

    @cached_property
    def sw(self) -> list[int]:
        acq = self.acq_mask
        return [
            row & acq if e.is_release else 0 for e, row in zip(self.events, self.rf)
        ]

    @cached_property
    def hb(self) -> list[int]:
        return closure([a | b for a, b in zip(self.sb, self.sw)])

    @cached_property
    def fr(self) -> list[int]:
        rows = compose(self.rf_inv, self.mo)
        return [row & ~(1 << i) for i, row in enumerate(rows)]

    @cached_property
    def eco(self) -> list[int]:
        return closure([a | b | c for a, b, c in zip(self.fr, self.mo, self.rf)])

    @cached_property
    def eco_closed(self) -> list[int]:
        """``rf ∪ mo ∪ fr ∪ (mo;rf) ∪ (fr;rf)`` without any closure."""
        mo_rf = compose(self.mo, self.rf)
        fr_rf = compose(self.fr, self.rf)
        return union(self.rf, self.mo, self.fr, mo_rf, fr_rf)

    @cached_property
    def hb_inv(self) -> list[int]:
        return inverse(self.hb)

    @cached_property
    def eco_inv(self) -> list[int]:
        return inverse(self.eco)

    # Thread views ----------------------------------------------------------

    def thread_mask(self, tid: int) -> int:
        return _mask(i for i, e in enumerate(self.events) if e.tid == tid)

    def hb_cone_mask(self, tid: int) -> int:
        """Initialisers, events of ``tid`` and their hb-predecessors."""
        cache = self._memo
        key = ("cone", tid)
        if key not in cache:
            own = self.thread_mask(tid)
            acc = self.init_mask | own
            for j in bits_of(own):
                acc |= self.hb_inv[j]
            cache[key] = acc
        return cache[key]

    def var_write_mask(self, var: str) -> int:
        cache = self._memo
        key = ("var", var)
        if key not in cache:
            cache[key] = _mask(
                i for i, e in enumerate(self.events) if e.is_write and e.var == var
            )
        return cache[key]

    @cached_property
    def _memo(self) -> dict:
        return {}

    def ew_mask(self, tid: int) -> int:
        cache = self._ew
        if tid in cache:
            return cache[tid]
        own = self.thread_mask(tid)
        if not own:
            cache[tid] = 0
            return 0
        # hb?-predecessors of tid's events, then eco?-predecessors of those
        pre = own
        for j in bits_of(own):
            pre |= self.hb_inv[j]
        seen = pre
        for j in bits_of(pre):
            seen |= self.eco_inv[j]
        cache[tid] = seen & self.write_mask
        return cache[tid]

    @cached_property
    def _ew(self) -> dict[int, int]:
        return {}

    def ow_mask(self, tid: int) -> int:
        cache = self._memo
        key = ("ow", tid)
        if key not in cache:
            ew = self.ew_mask(tid)
            out = 0
            for i in bits_of(self.write_mask):
                if not self.mo[i] & ew:
                    out |= 1 << i
            cache[key] = out
        return cache[key]

    @cached_property
    def cw_mask(self) -> int:
        out = 0
        for i in bits_of(self.write_mask):
            if self.rf[i] & self.update_mask:
                out |= 1 << i
        return out

    # Views -----------------------------------------------------------------

    def ev(self, mask: int) -> set[Event]:
        return {self.events[i] for i in bits_of(mask)}

    def pairs(self, rows: Sequence[int]) -> set[tuple[Event, Event]]:
        evs = self.events
        return {(evs[i], evs[j]) for i, row in enumerate(rows) for j in bits_of(row)}

    def has(self, rows: Sequence[int], a: Event, b: Event) -> bool:
        return bool(rows[self.index[a.tag]] >> self.index[b.tag] & 1)


def _mask(idx: Iterable[int]) -> int:
    m = 0
    for i in idx:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class DerivedRelations:
    """Pair-set view of the derived relations."""

    sw: frozenset[tuple[Event, Event]]
    hb: frozenset[tuple[Event, Event]]
    fr: frozenset[tuple[Event, Event]]
    eco: frozenset[tuple[Event, Event]]


def derived(state: C11State) -> DerivedRelations:
    r = state.rel
    return DerivedRelations(
        frozenset(r.pairs(r.sw)),
        frozenset(r.pairs(r.hb)),
        frozenset(r.pairs(r.fr)),
        frozenset(r.pairs(r.eco)),
    )


def eco_closed_form(state: C11State) -> frozenset[tuple[Event, Event]]:
    r = state.rel
    return frozenset(r.pairs(r.eco_closed))


def encountered_writes(state: C11State, tid: int) -> set[Event]:
    r = state.rel
    return r.ev(r.ew_mask(tid))


def observable_writes(state: C11State, tid: int) -> set[Event]:
    r = state.rel
    return r.ev(r.ow_mask(tid))


def covered_writes(state: C11State) -> set[Event]:
    r = state.rel
    return r.ev(r.cw_mask)


def last_write(state: C11State, var: str) -> Event:
    seq = state.mo_map.get(var)
    if not seq:
        raise KeyError(f"no modification of {var}")
    return state[seq[-1]]


def mo_insert(
    mo: tuple[tuple[str, tuple[Tag, ...]], ...], w: Event, e: Event
) -> tuple[tuple[str, tuple[Tag, ...]], ...]:
    """Place ``e`` immediately after ``w`` in the order of their variable."""
    if w.var != e.var:
        raise ValueError(f"cannot order {e} after {w}: different variables")
    out = []
    found = False
    for var, seq in mo:
        if var == w.var:
            if e.tag in seq:
                raise ValueError(f"{e} already in modification order")
            if w.tag not in seq:
                raise ValueError(f"{w} not in modification order")
            k = seq.index(w.tag) + 1
            seq = seq[:k] + (e.tag,) + seq[k:]
            found = True
        out.append((var, seq))
    if not found:
        raise ValueError(f"{w} not in modification order")
    return tuple(out)


@dataclass(frozen=True)
class MemoryStep:
    observed: Event
    event: Event
    state: C11State


def ra_step(state: C11State, tid: int, template: ActionTemplate) -> list[MemoryStep]:
    """Every way the event semantics can execute ``template`` in ``tid``.

    Results are ordered by the tag of the observed write.  An empty list
    means the action is disabled.
    """
    kind = template.kind
    if kind == TAU:
        raise ValueError("silent steps have no memory semantics")
    if tid == 0:
        raise ValueError("thread 0 only holds initialising writes")
    r = state.rel
    var = template.var
    index = state.next_index(tid)
    candidates = r.ow_mask(tid)
    if kind in WRITE_KINDS:
        candidates &= ~r.cw_mask
    out = []
    for i in bits_of(candidates):
        w = r.events[i]
        if w.var != var:
            continue
        if kind in (RD, RDA):
            e = Event(tid, index, kind, var, rdval=w.wrval)
        elif kind == UPD:
            e = Event(tid, index, kind, var, rdval=w.wrval, wrval=template.wrval)
        else:
            e = Event(tid, index, kind, var, wrval=template.wrval)
        if template.rdval is not None and e.rdval != template.rdval:
            continue
        events, sb = extend(state.events, state.sb, e)
        rf = state.rf | {(w.tag, e.tag)} if e.is_read else state.rf
        mo = mo_insert(state.mo, w, e) if e.is_write else state.mo
        out.append(MemoryStep(w, e, C11State(events, sb, rf, mo)))
    return out
