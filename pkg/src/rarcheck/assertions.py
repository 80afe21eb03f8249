"""Determinate-value and variable-order assertions, and their rule audit.

``rule_audit`` instantiates each of the eight proof rules on a concrete
transition ``(σ, m, e, σ')`` and records whether the premises held in ``σ``
and whether the conclusion holds in ``σ'``.  A record with premises held and
conclusion failed is a soundness violation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Union

from .core import C11State, Event, bits_of, last_write
from .lang import head_labels

if TYPE_CHECKING:
    from .explorer import Configuration


# ---------------------------------------------------------------------------
# Assertion syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetVal:
    tid: int
    var: str
    value: int

    def __str__(self) -> str:
        return f"detval({self.tid},{self.var},{self.value})"


@dataclass(frozen=True)
class VarOrd:
    first: str
    second: str

    def __str__(self) -> str:
        return f"varord({self.first},{self.second})"


@dataclass(frozen=True)
class UpdateOnly:
    var: str

    def __str__(self) -> str:
        return f"updonly({self.var})"


@dataclass(frozen=True)
class At:
    tid: int
    label: str

    def __str__(self) -> str:
        return f"at({self.tid},@{self.label})"


@dataclass(frozen=True)
class OutcomeEq:
    var: str
    value: int

    def __str__(self) -> str:
        return f"last({self.var}) == {self.value}"


@dataclass(frozen=True)
class Const:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not:
    arg: Assertion

    def __str__(self) -> str:
        return f"!{_wrap(self.arg)}"


@dataclass(frozen=True)
class And:
    left: Assertion
    right: Assertion

    def __str__(self) -> str:
        return f"{_wrap(self.left)} && {_wrap(self.right)}"


@dataclass(frozen=True)
class Or:
    left: Assertion
    right: Assertion

    def __str__(self) -> str:
        return f"{_wrap(self.left)} || {_wrap(self.right)}"


@dataclass(frozen=True)
class Implies:
    left: Assertion
    right: Assertion

    def __str__(self) -> str:
        return f"{_wrap(self.left)} -> {_wrap(self.right)}"


Assertion = Union[DetVal, VarOrd, UpdateOnly, At, OutcomeEq, Const, Not, And, Or, Implies]


def _wrap(a: Assertion) -> str:
    return f"({a})" if isinstance(a, (And, Or, Implies)) else str(a)


def all_of(*parts: Assertion) -> Assertion:
    out: Assertion = Const(True)
    for i, p in enumerate(parts):
        out = p if i == 0 else And(out, p)
    return out


# ---------------------------------------------------------------------------
# Predicates on states
# ---------------------------------------------------------------------------


def hb_cone(state: C11State, tid: int) -> set[Event]:
    r = state.rel
    return r.ev(r.hb_cone_mask(tid))


def det_val(state: C11State, tid: int, var: str) -> Optional[int]:
    """The value ``tid`` is bound to read for ``var``, if it is determined."""
    r = state.rel
    last = last_write(state, var)
    li = r.index[last.tag]
    if r.ow_mask(tid) & r.var_write_mask(var) != 1 << li:
        return None
    if not r.hb_cone_mask(tid) >> li & 1:
        return None
    return last.wrval


def var_ord(state: C11State, x: str, y: str) -> bool:
    r = state.rel
    a = r.index[last_write(state, x).tag]
    b = r.index[last_write(state, y).tag]
    return bool(r.hb[a] >> b & 1)


def update_only(state: C11State, var: str) -> bool:
    return all(
        e.tid == 0 or e.is_update for e in state.events if e.is_write and e.var == var
    )


def eval_assertion(config: Configuration, a: Assertion) -> bool:
    state = config.state
    if isinstance(a, DetVal):
        return det_val(state, a.tid, a.var) == a.value
    if isinstance(a, VarOrd):
        return var_ord(state, a.first, a.second)
    if isinstance(a, UpdateOnly):
        return update_only(state, a.var)
    if isinstance(a, At):
        return a.label in head_labels(config.program[a.tid])
    if isinstance(a, OutcomeEq):
        return last_write(state, a.var).wrval == a.value
    if isinstance(a, Const):
        return a.value
    if isinstance(a, Not):
        return not eval_assertion(config, a.arg)
    if isinstance(a, And):
        return eval_assertion(config, a.left) and eval_assertion(config, a.right)
    if isinstance(a, Or):
        return eval_assertion(config, a.left) or eval_assertion(config, a.right)
    if isinstance(a, Implies):
        return not eval_assertion(config, a.left) or eval_assertion(config, a.right)
    raise TypeError(f"not an assertion: {a!r}")


def assertion_atoms(a: Assertion) -> Iterable[Assertion]:
    if isinstance(a, Not):
        yield from assertion_atoms(a.arg)
    elif isinstance(a, (And, Or, Implies)):
        yield from assertion_atoms(a.left)
        yield from assertion_atoms(a.right)
    else:
        yield a


# ---------------------------------------------------------------------------
# Rule audit
# ---------------------------------------------------------------------------

RULES = ("Init", "ModLast", "Transfer", "UOrd", "NoMod", "AcqRd", "WOrd", "NoModOrd")


@dataclass(frozen=True)
class RuleAuditRecord:
    rule: str
    premises_held: bool
    conclusion_held: bool
    transition: str
    instance: str = ""

    @property
    def violation(self) -> bool:
        return self.premises_held and not self.conclusion_held


class StateFacts:
    """det_val / var_ord / update_only tables of one state."""

    def __init__(self, state: C11State, tids: Sequence[int], variables: Sequence[str]):
        self.state = state
        self.det = {(t, x): det_val(state, t, x) for t in tids for x in variables}
        self.ord = {
            (x, y): var_ord(state, x, y) for x in variables for y in variables if x != y
        }
        self.last = {x: last_write(state, x) for x in variables}
        self.upd_only = {x: update_only(state, x) for x in variables}


def transition_id(state: C11State, observed: Event, event: Event) -> str:
    return f"{observed} -> {event} at {state.size} events"


def audit_initial(
    state: C11State, tids: Sequence[int], variables: Sequence[str]
) -> list[RuleAuditRecord]:
    """The Init rule on an initial state."""
    out = []
    for t in tids:
        for x in variables:
            want = last_write(state, x).wrval
            got = det_val(state, t, x)
            out.append(RuleAuditRecord("Init", True, got == want, "initial", f"t={t} {x}={want}"))
    return out


def rule_audit(
    before: C11State,
    observed: Event,
    event: Event,
    after: C11State,
    tids: Sequence[int],
    variables: Sequence[str],
    *,
    include_idle: bool = False,
    pre: Optional[StateFacts] = None,
    post: Optional[StateFacts] = None,
) -> list[RuleAuditRecord]:
    """Audit ModLast, Transfer, UOrd, NoMod, AcqRd, WOrd and NoModOrd.

    ``observed`` plays the role of the rule's ``m``.  By default only
    instances whose premises hold are returned.
    """
    pre = pre or StateFacts(before, tids, variables)
    post = post or StateFacts(after, tids, variables)
    tid = event.tid
    x_e = event.var
    m_is_last = pre.last[x_e] == observed
    ar = after.rel
    sw = bool(ar.sw[ar.index[observed.tag]] >> ar.index[event.tag] & 1)
    tr = transition_id(before, observed, event)
    out: list[RuleAuditRecord] = []

    def rec(rule: str, premises: bool, conclusion_fn, instance: str) -> None:
        if premises:
            out.append(RuleAuditRecord(rule, True, bool(conclusion_fn()), tr, instance))
        elif include_idle:
            out.append(RuleAuditRecord(rule, False, bool(conclusion_fn()), tr, instance))

    # ModLast
    if event.is_write:
        rec(
            "ModLast",
            m_is_last,
            lambda: post.det[(tid, x_e)] == event.wrval,
            f"{x_e}={event.wrval}",
        )
    # AcqRd: its soundness argument needs mo unchanged, so updates are exempt
    if event.is_acquire and not event.is_write:
        rec(
            "AcqRd",
            observed.is_release and m_is_last,
            lambda: post.det[(tid, x_e)] == event.rdval,
            f"{x_e}={event.rdval}",
        )
    for x in variables:
        # NoMod, for every thread
        if not (event.is_write and x == x_e):
            for t in tids:
                v = pre.det[(t, x)]
                rec(
                    "NoMod",
                    v is not None,
                    lambda t=t, v=v: post.det[(t, x)] == v,
                    f"t={t} {x}={v}",
                )
        if x == x_e:
            continue
        y = x_e
        # Transfer
        if event.is_read:
            for t in tids:
                v = pre.det[(t, x)]
                rec(
                    "Transfer",
                    pre.ord[(x, y)] and v is not None and sw and m_is_last,
                    lambda v=v: post.det[(tid, x)] == v,
                    f"{x}->{y} t={t} {x}={v}",
                )
        if event.is_update:
            rec(
                "UOrd",
                observed.is_release and pre.ord[(x, y)],
                lambda: post.ord[(x, y)],
                f"{x}->{y}",
            )
        if event.is_write:
            v = pre.det[(tid, x)]
            rec(
                "WOrd",
                v is not None and m_is_last,
                lambda: post.ord[(x, y)],
                f"{x}->{y} {x}={v}",
            )
    for x in variables:
        for y in variables:
            if x == y:
                continue
            if event.is_write and event.var in (x, y):
                continue
            rec("NoModOrd", pre.ord[(x, y)], lambda x=x, y=y: post.ord[(x, y)], f"{x}->{y}")
    return out


# ---------------------------------------------------------------------------
# Lemmas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaFailure:
    lemma: str
    detail: str


def check_transition_lemmas(
    before: C11State, observed: Event, event: Event, pre: StateFacts
) -> list[LemmaFailure]:
    """Determinate-value read and last-modification checks on one transition.

    The update-only disjunct of the last-modification check applies to
    transitions that modify the variable: a plain read of an update-only
    variable may still observe a covered, older write.
    """
    out = []
    x = event.var
    v = pre.det.get((event.tid, x))
    if event.is_read and v is not None and event.rdval != v:
        out.append(
            LemmaFailure("Determinate-Value Read", f"{event} read {event.rdval}, determined {v}")
        )
    last = pre.last[x]
    if (v is not None or (event.is_write and pre.upd_only[x])) and observed != last:
        out.append(
            LemmaFailure("Last Modification Transition", f"{event} observed {observed}, last is {last}")
        )
    return out


def check_agreement(facts: StateFacts) -> list[LemmaFailure]:
    vals: dict[str, set[int]] = {}
    for (t, x), v in facts.det.items():
        if v is not None:
            vals.setdefault(x, set()).add(v)
    return [
        LemmaFailure("Determinate-Value Agreement", f"{x} determined as {sorted(vs)}")
        for x, vs in sorted(vals.items())
        if len(vs) > 1
    ]


def check_state_lemmas(state: C11State, tids: Sequence[int], variables: Sequence[str]) -> list[LemmaFailure]:
    """State invariants of the memory model on a reachable state.

    Covers: last writes observable and uncovered, rf in-degree one, the
    update-ordering facts, the closed form of eco, and the coherence
    inclusions.
    """
    r = state.rel
    out: list[LemmaFailure] = []
    cw = r.cw_mask
    for x in variables:
        li = r.index[last_write(state, x).tag]
        if cw >> li & 1:
            out.append(LemmaFailure("last uncovered", f"last({x}) is covered"))
        for t in tids:
            if not r.ow_mask(t) >> li & 1:
                out.append(LemmaFailure("last observable", f"last({x}) hidden from thread {t}"))
    for i in bits_of(r.read_mask):
        if bin(r.rf_inv[i]).count("1") != 1:
            out.append(LemmaFailure("rf in-degree", f"{r.events[i]}"))
    for u in bits_of(r.update_mask):
        if r.fr[u] & ~r.mo[u]:
            out.append(LemmaFailure("update orderings", f"fr from {r.events[u]} not in mo"))
        for w in bits_of(r.rf_inv[u]):
            if not r.mo[w] >> u & 1:
                out.append(LemmaFailure("update orderings", f"rf into {r.events[u]} not in mo"))
    if r.eco != r.eco_closed:
        out.append(LemmaFailure("eco closed form", "closure and closed form differ"))
    out += coherence_inclusions(state)
    return out


def coherence_inclusions(state: C11State) -> list[LemmaFailure]:
    """rf;fr ⊆ mo, rf;mo ⊆ mo, rf;rf ⊆ mo;rf, mo;fr ⊆ mo, fr;mo ⊆ fr, fr;fr ⊆ fr."""
    from .core import compose

    r = state.rel
    rf, mo, fr = r.rf, r.mo, r.fr
    mo_rf = compose(mo, rf)
    checks = [
        ("rf;fr ⊆ mo", compose(rf, fr), mo),
        ("rf;mo ⊆ mo", compose(rf, mo), mo),
        ("rf;rf ⊆ mo;rf", compose(rf, rf), mo_rf),
        ("mo;fr ⊆ mo", compose(mo, fr), mo),
        ("fr;mo ⊆ fr", compose(fr, mo), fr),
        ("fr;fr ⊆ fr", compose(fr, fr), fr),
    ]
    out = []
    for name, lhs, rhs in checks:
        if any(a & ~b for a, b in zip(lhs, rhs)):
            out.append(LemmaFailure("coherence inclusions", name))
    return out
