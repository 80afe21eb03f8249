"""Exhaustive agreement check between the two consistency checkers.

Every candidate execution with at most ``max_events`` non-initialising
events over ``variables`` variables is generated: thread layouts, event
kinds and variables, every rf choice (each read takes exactly one
same-variable write) and every per-variable mo order with the initialiser
first.  On each one the Coherence decision and the weak canonical decision
are compared.

Two reductions keep the sweep tractable:

* Symmetry.  Threads are generated as a sorted multiset and variable
  renamings are quotiented out; both checkers are invariant under renaming
  threads and variables.  ``symmetry=False`` walks every labelled layout.
* Values.  Neither checker reads values: once rf is fixed, RF-Complete pins
  every read value to its source and the decisions depend only on the
  relations.  Each value-free candidate therefore stands for
  ``values ** writes`` valued ones, which are counted, not re-checked.
  ``exhaustive_values=True`` instead builds each valued candidate as a
  state and runs the public checkers on it.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .core import Event, closure, make_state, canonical_sb
from .lang import RD, RDA, UPD, WR, WRR
from .validity import (
    check_validity,
    check_weak_canonical,
    coherence_holds,
    weak_canonical_holds,
)

KINDS = (RD, RDA, WR, WRR, UPD)
_WRITE = {WR, WRR, UPD}
_READ = {RD, RDA, UPD}
_RELEASE = {WRR, UPD}
_ACQUIRE = {RDA, UPD}


@dataclass
class EquivReport:
    max_events: int
    variables: int
    values: int
    symmetry: bool
    candidates: int = 0  # value-free candidates checked
    valued: int = 0  # valued candidates represented
    verdicts: Counter = field(default_factory=Counter)
    disagreements: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def lines(self) -> list[str]:
        return [
            f"box: events <= {self.max_events}, variables <= {self.variables}, values {self.values}",
            f"symmetry reduction: {'on' if self.symmetry else 'off'}",
            f"candidates checked: {self.candidates}",
            f"valued candidates represented: {self.valued}",
            f"both consistent: {self.verdicts['both-pass']}",
            f"both inconsistent: {self.verdicts['both-fail']}",
            f"disagreements: {len(self.disagreements)}",
        ]


def _thread_layouts(n: int, labels: list, symmetry: bool) -> Iterator[tuple]:
    """Tuples of non-empty label sequences with ``n`` labels in total."""
    if not symmetry:
        for sizes in _compositions(n):
            pools = [itertools.product(labels, repeat=k) for k in sizes]
            yield from itertools.product(*[list(p) for p in pools])
        return
    seqs = sorted(
        (s for k in range(1, n + 1) for s in itertools.product(labels, repeat=k)),
        key=lambda s: (len(s), s),
    )
    by_len: dict[int, list[int]] = {}
    for i, s in enumerate(seqs):
        by_len.setdefault(len(s), []).append(i)

    def rec(rem: int, start: int):
        if rem == 0:
            yield ()
            return
        for k in range(1, rem + 1):
            for i in by_len[k]:
                if i < start:
                    continue
                for rest in rec(rem - k, i):
                    yield (seqs[i],) + rest

    yield from rec(n, 0)


def _compositions(n: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for k in range(1, n + 1):
        for rest in _compositions(n - k):
            yield (k,) + rest


def _canonical_under_renaming(layout: tuple, nvars: int) -> bool:
    """True iff ``layout`` is the least member of its variable-renaming orbit."""
    key = tuple(sorted(layout, key=lambda s: (len(s), s)))
    for perm in itertools.permutations(range(nvars)):
        if list(perm) == list(range(nvars)):
            continue
        other = tuple(
            sorted(
                (tuple((k, perm[v]) for k, v in s) for s in layout),
                key=lambda s: (len(s), s),
            )
        )
        if (tuple((len(s), s) for s in other)) < tuple((len(s), s) for s in key):
            return False
    return True


def _layout_events(layout: tuple, nvars: int):
    """(kind, var, tid, index) per event: initialisers first, then threads."""
    evs = [(WR, v, 0, v) for v in range(nvars)]
    for t, seq in enumerate(layout, start=1):
        for i, (k, v) in enumerate(seq):
            evs.append((k, v, t, i))
    return evs


def sweep(
    max_events: int,
    variables: int,
    values: int,
    *,
    symmetry: bool = True,
    exhaustive_values: bool = False,
    keep: int = 10,
) -> EquivReport:
    report = EquivReport(max_events, variables, values, symmetry)
    if variables < 1:
        return report
    # executions using fewer variables appear with idle initialisers
    nvars = variables
    labels = [(k, v) for k in KINDS for v in range(nvars)]
    for n in range(max_events + 1):
        for layout in _thread_layouts(n, labels, symmetry):
            if symmetry and not _canonical_under_renaming(layout, nvars):
                continue
            if exhaustive_values:
                _check_layout_valued(layout, nvars, values, report, keep)
            else:
                _check_layout(layout, nvars, values, report, keep)
    return report


def _check_layout(layout, nvars, values, report: EquivReport, keep: int) -> None:
    evs = _layout_events(layout, nvars)
    n = len(evs)
    sb = [0] * n
    for i, (_, _, ti, ii) in enumerate(evs):
        for j, (_, _, tj, ij) in enumerate(evs):
            if tj != 0 and (ti == 0 or (ti == tj and ii < ij)):
                sb[i] |= 1 << j
    writes_of = [[i for i, e in enumerate(evs) if e[0] in _WRITE and e[1] == v] for v in range(nvars)]
    reads = [i for i, e in enumerate(evs) if e[0] in _READ]
    weight = values ** sum(len(w) for w in writes_of)
    # mo choices per variable as row fragments
    mo_frags = []
    for ws in writes_of:
        init, rest = ws[0], ws[1:]
        frags = []
        for perm in itertools.permutations(rest):
            order = (init,) + perm
            rows = [0] * n
            after = 0
            for i in reversed(order):
                rows[i] = after
                after |= 1 << i
            frags.append(rows)
        mo_frags.append(frags)
    mo_choices = []
    for combo in itertools.product(*mo_frags):
        rows = [0] * n
        for frag in combo:
            for i in range(n):
                rows[i] |= frag[i]
        mo_choices.append(rows)
    rf_src = [writes_of[evs[r][1]] for r in reads]
    release = [evs[i][0] in _RELEASE for i in range(n)]
    acquire_mask = 0
    for i in range(n):
        if evs[i][0] in _ACQUIRE:
            acquire_mask |= 1 << i
    verdicts = report.verdicts
    for choice in itertools.product(*rf_src):
        rf = [0] * n
        rf_inv = [0] * n
        for r, w in zip(reads, choice):
            rf[w] |= 1 << r
            rf_inv[r] |= 1 << w
        hb = closure([sb[i] | (rf[i] & acquire_mask if release[i] else 0) for i in range(n)])
        for mo in mo_choices:
            c = coherence_holds(n, hb, rf, rf_inv, mo)
            w = weak_canonical_holds(n, hb, rf, rf_inv, mo)
            report.candidates += 1
            report.valued += weight
            if c == w:
                verdicts["both-pass" if c else "both-fail"] += weight
            else:
                verdicts["disagree"] += weight
                if len(report.disagreements) < keep:
                    report.disagreements.append((layout, choice, mo, c, w))


def _check_layout_valued(layout, nvars, values, report: EquivReport, keep: int) -> None:
    """Build every valued candidate as a state and run the public checkers."""
    evs = _layout_events(layout, nvars)
    names = [f"v{i}" for i in range(nvars)]
    write_idx = [i for i, e in enumerate(evs) if e[0] in _WRITE]
    reads = [i for i, e in enumerate(evs) if e[0] in _READ]
    writes_of = {v: [i for i in write_idx if evs[i][1] == v] for v in range(nvars)}
    for vals in itertools.product(range(values), repeat=len(write_idx)):
        wv = dict(zip(write_idx, vals))
        for choice in itertools.product(*[writes_of[evs[r][1]] for r in reads]):
            rv = dict(zip(reads, (wv[w] for w in choice)))
            events = [
                Event(t, i, k, names[v], rv.get(j), wv.get(j))
                for j, (k, v, t, i) in enumerate(evs)
            ]
            tag = [e.tag for e in events]
            rf = {(tag[w], tag[r]) for r, w in zip(reads, choice)}
            sb = canonical_sb(events)
            mo_opts = []
            for v in range(nvars):
                ws = writes_of[v]
                mo_opts.append(
                    [(names[v], [tag[ws[0]]] + [tag[i] for i in p]) for p in itertools.permutations(ws[1:])]
                )
            for mo in itertools.product(*mo_opts):
                state = make_state(events, sb, rf, dict(mo))
                c = check_validity(state)["Coherence"].ok
                w = check_weak_canonical(state).ok
                report.candidates += 1
                report.valued += 1
                if c == w:
                    report.verdicts["both-pass" if c else "both-fail"] += 1
                else:
                    report.verdicts["disagree"] += 1
                    if len(report.disagreements) < keep:
                        report.disagreements.append(state)
