"""Command language: AST, value-agnostic small-step semantics, litmus specs.

Stepping is split in two layers.  ``_step`` computes the single syntactic
step a command can take as an action template plus a continuation that maps
the value bound to the template's read slot to the residual command.  The
public ``command_step`` and ``program_steps`` are thin views over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Optional, Union

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

# Read / write annotations.
RLX = "rlx"
ACQ = "acq"
REL = "rel"

# Action kinds.
RD = "rd"
RDA = "rdA"
WR = "wr"
WRR = "wrR"
UPD = "updRA"
TAU = "tau"

READ_KINDS = frozenset({RD, RDA, UPD})
WRITE_KINDS = frozenset({WR, WRR, UPD})
ACQUIRE_KINDS = frozenset({RDA, UPD})
RELEASE_KINDS = frozenset({WRR, UPD})

Pos = Optional[tuple[int, int]]


def wrap64(n: int) -> int:
    """Wrap an integer into the signed 64-bit range."""
    n &= 0xFFFFFFFFFFFFFFFF
    return n - (1 << 64) if n > INT64_MAX else n


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: int
    pos: Pos = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class VarRead:
    var: str
    ann: str = RLX  # RLX or ACQ
    pos: Pos = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"acq({self.var})" if self.ann == ACQ else self.var


@dataclass(frozen=True)
class Unary:
    op: str  # "not" | "neg"
    arg: Expr
    pos: Pos = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return ("!" if self.op == "not" else "-") + _paren(self.arg)


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    pos: Pos = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{_paren(self.left)} {BINARY_SYMBOLS[self.op]} {_paren(self.right)}"


Expr = Union[Lit, VarRead, Unary, Binary]

BINARY_SYMBOLS = {
    "and": "&&",
    "or": "||",
    "eq": "==",
    "neq": "!=",
    "lt": "<",
    "add": "+",
    "sub": "-",
}


def _paren(e: Expr) -> str:
    return f"({e})" if isinstance(e, Binary) else str(e)


def _truth(b: bool) -> int:
    return 1 if b else 0


_BINARY_EVAL: dict[str, Callable[[int, int], int]] = {
    "and": lambda a, b: _truth(a != 0 and b != 0),
    "or": lambda a, b: _truth(a != 0 or b != 0),
    "eq": lambda a, b: _truth(a == b),
    "neq": lambda a, b: _truth(a != b),
    "lt": lambda a, b: _truth(a < b),
    "add": lambda a, b: wrap64(a + b),
    "sub": lambda a, b: wrap64(a - b),
}


def free_vars(e: Expr) -> list[str]:
    """Variables read by ``e``, one entry per occurrence, left to right."""
    if isinstance(e, Lit):
        return []
    if isinstance(e, VarRead):
        return [e.var]
    if isinstance(e, Unary):
        return free_vars(e.arg)
    return free_vars(e.left) + free_vars(e.right)


def is_closed(e: Expr) -> bool:
    if isinstance(e, Lit):
        return True
    if isinstance(e, VarRead):
        return False
    if isinstance(e, Unary):
        return is_closed(e.arg)
    return is_closed(e.left) and is_closed(e.right)


def evaluate(e: Expr) -> int:
    """Value of a variable-free expression."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, VarRead):
        raise ValueError(f"expression reads {e.var}; not variable-free")
    if isinstance(e, Unary):
        v = evaluate(e.arg)
        return _truth(v == 0) if e.op == "not" else wrap64(-v)
    return _BINARY_EVAL[e.op](evaluate(e.left), evaluate(e.right))


def _expr_read(e: Expr) -> Optional[tuple[VarRead, Callable[[int], Expr]]]:
    """Leftmost read of ``e`` and a function plugging a value in its place."""
    if isinstance(e, Lit):
        return None
    if isinstance(e, VarRead):
        return e, lambda v: Lit(v, e.pos)
    if isinstance(e, Unary):
        inner = _expr_read(e.arg)
        if inner is None:
            return None
        read, plug = inner
        return read, lambda v: Unary(e.op, plug(v), e.pos)
    left = _expr_read(e.left)
    if left is not None:
        read, plug = left
        return read, lambda v: Binary(e.op, plug(v), e.right, e.pos)
    right = _expr_read(e.right)
    if right is None:
        return None
    read, plug = right
    return read, lambda v: Binary(e.op, e.left, plug(v), e.pos)


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionTemplate:
    """An action, possibly with its read slot still open (``rdval is None``)."""

    kind: str
    var: Optional[str] = None
    wrval: Optional[int] = None
    rdval: Optional[int] = None

    @property
    def is_open(self) -> bool:
        return self.kind in READ_KINDS and self.rdval is None

    def bind(self, value: int) -> ActionTemplate:
        if self.kind not in READ_KINDS:
            raise ValueError(f"{self.kind} has no read slot")
        return ActionTemplate(self.kind, self.var, self.wrval, value)

    def __str__(self) -> str:
        if self.kind == TAU:
            return "tau"
        rd = "_" if self.rdval is None else str(self.rdval)
        if self.kind == UPD:
            return f"updRA({self.var},{rd},{self.wrval})"
        if self.kind in READ_KINDS:
            return f"{self.kind}({self.var},{rd})"
        return f"{self.kind}({self.var},{self.wrval})"


TAU_ACTION = ActionTemplate(TAU)


def eval_expr_step(e: Expr, chosen: int) -> Optional[tuple[ActionTemplate, Expr]]:
    """Read the leftmost variable of ``e`` as ``chosen``; None if variable-free."""
    found = _expr_read(e)
    if found is None:
        return None
    read, plug = found
    kind = RDA if read.ann == ACQ else RD
    return ActionTemplate(kind, read.var, rdval=chosen), plug(chosen)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    var: str
    ann: str  # RLX or REL
    expr: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Swap:
    var: str
    value: int
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Command
    orelse: Command
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    """A loop.  ``current`` is the guard part-way through evaluation.

    Unfolding restarts from ``cond``, so a spin loop re-reads its variables on
    every iteration.
    """

    cond: Expr
    body: Command
    current: Optional[Expr] = None
    pos: Pos = field(default=None, compare=False, repr=False)

    @property
    def guard(self) -> Expr:
        return self.cond if self.current is None else self.current


@dataclass(frozen=True)
class Label:
    name: str
    body: Command
    pos: Pos = field(default=None, compare=False, repr=False)


Command = Union[Skip, Assign, Swap, Seq, If, While, Label]

SKIP = Skip()


def is_skip(c: Command) -> bool:
    """True for ``skip``, possibly under labels."""
    while isinstance(c, Label):
        c = c.body
    return isinstance(c, Skip)


def seq(*cmds: Command) -> Command:
    """Right-nested sequence; the empty sequence is ``skip``."""
    if not cmds:
        return SKIP
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def head_labels(c: Command) -> frozenset[str]:
    """Labels of the command thread execution will continue with."""
    names: set[str] = set()
    while True:
        if isinstance(c, Label):
            names.add(c.name)
            c = c.body
        elif isinstance(c, Seq):
            if isinstance(c.first, Skip) and not names:
                # a completed unlabeled statement: the next statement is next
                c = c.second
            else:
                c = c.first
        else:
            return frozenset(names)


def labels_of(c: Command) -> list[str]:
    """All labels occurring in ``c`` in source order."""
    out: list[str] = []

    def walk(c: Command) -> None:
        if isinstance(c, Label):
            out.append(c.name)
            walk(c.body)
        elif isinstance(c, Seq):
            walk(c.first)
            walk(c.second)
        elif isinstance(c, If):
            walk(c.then)
            walk(c.orelse)
        elif isinstance(c, While):
            walk(c.body)

    walk(c)
    return out


def command_exprs(c: Command) -> Iterator[Expr]:
    """Every expression occurring in ``c``."""
    if isinstance(c, Assign):
        yield c.expr
    elif isinstance(c, Seq):
        yield from command_exprs(c.first)
        yield from command_exprs(c.second)
    elif isinstance(c, If):
        yield c.cond
        yield from command_exprs(c.then)
        yield from command_exprs(c.orelse)
    elif isinstance(c, While):
        yield c.cond
        if c.current is not None:
            yield c.current
        yield from command_exprs(c.body)
    elif isinstance(c, Label):
        yield from command_exprs(c.body)


def _expr_literals(e: Expr) -> Iterator[int]:
    if isinstance(e, Lit):
        yield e.value
    elif isinstance(e, Unary):
        yield from _expr_literals(e.arg)
    elif isinstance(e, Binary):
        yield from _expr_literals(e.left)
        yield from _expr_literals(e.right)


def command_literals(c: Command) -> set[int]:
    """Integer literals of ``c``, including swap operands."""
    out: set[int] = set()
    for e in command_exprs(c):
        out.update(_expr_literals(e))

    def swaps(c: Command) -> None:
        if isinstance(c, Swap):
            out.add(c.value)
        elif isinstance(c, Seq):
            swaps(c.first)
            swaps(c.second)
        elif isinstance(c, If):
            swaps(c.then)
            swaps(c.orelse)
        elif isinstance(c, While):
            swaps(c.body)
        elif isinstance(c, Label):
            swaps(c.body)

    swaps(c)
    return out


Continuation = Callable[[int], Command]


def _step(c: Command, wrap: Callable[[Command], Command] = lambda w: w):
    """The unique step of ``c`` as ``(template, continuation, keeps_position)``.

    ``keeps_position`` marks steps that only evaluate part of an expression;
    a label around such a command stays in place.  ``wrap`` re-applies
    enclosing labels to a loop when it unfolds.  Returns None if ``c`` is
    stuck (finished).
    """
    if isinstance(c, Skip):
        return None
    if isinstance(c, Assign):
        found = _expr_read(c.expr)
        if found is not None:
            read, plug = found
            tmpl = ActionTemplate(RDA if read.ann == ACQ else RD, read.var)
            return tmpl, lambda v: Assign(c.var, c.ann, plug(v), c.pos), True
        kind = WRR if c.ann == REL else WR
        tmpl = ActionTemplate(kind, c.var, wrval=evaluate(c.expr))
        return tmpl, lambda _v: SKIP, False
    if isinstance(c, Swap):
        return ActionTemplate(UPD, c.var, wrval=c.value), lambda _v: SKIP, False
    if isinstance(c, Seq):
        if is_skip(c.first):
            second = c.second
            return TAU_ACTION, lambda _v: second, False
        inner = _step(c.first)
        if inner is None:
            return None
        tmpl, cont, _keep = inner
        return tmpl, lambda v: Seq(cont(v), c.second, c.pos), False
    if isinstance(c, If):
        found = _expr_read(c.cond)
        if found is not None:
            read, plug = found
            tmpl = ActionTemplate(RDA if read.ann == ACQ else RD, read.var)
            return tmpl, lambda v: If(plug(v), c.then, c.orelse, c.pos), True
        branch = c.then if evaluate(c.cond) != 0 else c.orelse
        return TAU_ACTION, lambda _v: branch, False
    if isinstance(c, While):
        found = _expr_read(c.guard)
        if found is not None:
            read, plug = found
            tmpl = ActionTemplate(RDA if read.ann == ACQ else RD, read.var)
            return tmpl, lambda v: While(c.cond, c.body, plug(v), c.pos), True
        if evaluate(c.guard) != 0:
            again = Seq(c.body, wrap(While(c.cond, c.body, None, c.pos)), c.pos)
            return TAU_ACTION, lambda _v: again, False
        return TAU_ACTION, lambda _v: SKIP, False
    if isinstance(c, Label):
        inner = _step(c.body, lambda w: Label(c.name, wrap(w), c.pos))
        if inner is None:
            return None
        tmpl, cont, keep = inner
        if keep:
            return tmpl, lambda v: Label(c.name, cont(v), c.pos), True
        return tmpl, cont, False
    raise TypeError(f"not a command: {c!r}")


def command_step(c: Command, chosen: int) -> set[tuple[ActionTemplate, Command]]:
    """All steps of ``c`` with any read slot bound to ``chosen``."""
    found = _step(c)
    if found is None:
        return set()
    tmpl, cont, _keep = found
    if tmpl.kind in READ_KINDS:
        tmpl = tmpl.bind(chosen)
    return {(tmpl, cont(chosen))}


# ---------------------------------------------------------------------------
# Programs and specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Program:
    """Residual commands per thread, as a tuple sorted by thread id."""

    threads: tuple[tuple[int, Command], ...]

    @classmethod
    def of(cls, mapping: Mapping[int, Command]) -> Program:
        if 0 in mapping:
            raise ValueError("thread id 0 is reserved for initialising writes")
        return cls(tuple(sorted(mapping.items(), key=lambda kv: kv[0])))

    def __getitem__(self, tid: int) -> Command:
        for t, c in self.threads:
            if t == tid:
                return c
        raise KeyError(tid)

    def tids(self) -> list[int]:
        return [t for t, _ in self.threads]

    def replace(self, tid: int, c: Command) -> Program:
        return Program(tuple((t, c if t == tid else old) for t, old in self.threads))

    @property
    def is_final(self) -> bool:
        return all(is_skip(c) for _, c in self.threads)


@dataclass(frozen=True)
class ProgramStep:
    """One syntactic step of one thread; ``resume`` binds the read slot."""

    tid: int
    template: ActionTemplate
    cont: Continuation = field(compare=False, repr=False)
    program: Program = field(compare=False, repr=False)

    def resume(self, value: int = 0) -> Program:
        return self.program.replace(self.tid, self.cont(value))


def thread_step(p: Program, tid: int) -> Optional[ProgramStep]:
    found = _step(p[tid])
    if found is None:
        return None
    tmpl, cont, _keep = found
    return ProgramStep(tid, tmpl, cont, p)


def program_steps(p: Program) -> list[ProgramStep]:
    """Steps of every thread in thread-id order, read slots left open."""
    out = []
    for tid in p.tids():
        s = thread_step(p, tid)
        if s is not None:
            out.append(s)
    return out


SCOPES = ("always", "reachable", "finally")


@dataclass(frozen=True)
class LitmusSpec:
    name: str
    init: tuple[tuple[str, int], ...]  # declaration order
    threads: tuple[tuple[int, Command], ...]
    assertions: tuple[tuple[str, object], ...] = ()  # (scope, Assertion)
    bound: Optional[int] = None

    @property
    def variables(self) -> list[str]:
        return [x for x, _ in self.init]

    @property
    def init_map(self) -> dict[str, int]:
        return dict(self.init)

    @property
    def program(self) -> Program:
        return Program.of(dict(self.threads))

    @property
    def tids(self) -> list[int]:
        return sorted(t for t, _ in self.threads)

    def labels(self, tid: int) -> list[str]:
        return labels_of(dict(self.threads)[tid])

    def value_domain(self) -> set[int]:
        """Program literals together with initial values."""
        dom = {v for _, v in self.init}
        for _, c in self.threads:
            dom |= command_literals(c)
        return dom
