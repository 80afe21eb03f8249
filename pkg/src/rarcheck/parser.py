"""Recursive-descent parser for litmus files.

Grammar (``;`` after ``name``/``init``/``bound`` is optional)::

    file     := item*
    item     := 'name' STRING | 'init' decl (',' decl)* | 'bound' INT
              | 'thread' INT '{' stmt* '}' | 'assert' scope assertion ';'
    decl     := IDENT '=' int
    stmt     := '@' IDENT ':' stmt | 'skip' ';' | IDENT ':=' ['[' 'rel' ']'] expr ';'
              | 'swap' '(' IDENT ',' int ')' ';'
              | 'if' '(' expr ')' block ['else' block] | 'while' '(' expr ')' block
    scope    := 'always' | 'reachable' | 'finally'
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .assertions import (
    And,
    Assertion,
    At,
    Const,
    DetVal,
    Implies,
    Not,
    Or,
    OutcomeEq,
    UpdateOnly,
    VarOrd,
)
from .lang import (
    ACQ,
    INT64_MAX,
    INT64_MIN,
    REL,
    RLX,
    Assign,
    Binary,
    Command,
    Expr,
    If,
    Label,
    LitmusSpec,
    Lit,
    Skip,
    Swap,
    Unary,
    VarRead,
    While,
    free_vars,
    seq,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: frozenset[str] = frozenset()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        text = f"{line}:{col}: {message}"
        if expected:
            text += f" (expected one of: {', '.join(sorted(expected))})"
        super().__init__(text)


class Token(NamedTuple):
    kind: str  # ident, int, string, op, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|==|!=|&&|\|\||->|[{}();,=@:<!+\-\[\]])
    """,
    re.VERBOSE,
)

KEYWORDS = frozenset(
    "name init bound thread assert skip swap if else while acq true false "
    "always reachable finally at detval varord updonly last rel".split()
)


def tokenize(text: str) -> list[Token]:
    out = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                out.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


@dataclass
class _Thread:
    tid: int
    body: Command
    labels: list[str]


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.declared: dict[str, int] = {}
        self.name = ""
        self.bound: Optional[int] = None
        self.threads: dict[int, _Thread] = {}
        self.assertions: list[tuple[str, Assertion, Token]] = []
        self.labels: list[str] = []

    # token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, message: str, expected=(), tok: Optional[Token] = None):
        t = tok or self.tok
        raise ParseError(message, t.line, t.col, frozenset(expected))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.fail(f"unexpected {found!r}", {text})
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected {what}, found {t.text or 'end of input'!r}", {what})
        return self.advance()

    def integer(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.tok
        if t.kind == "int":
            self.advance()
            v = -int(t.text) if neg else int(t.text)
        elif not neg and self.at("true", "false"):
            self.advance()
            v = 1 if t.text == "true" else 0
        else:
            self.fail(f"expected integer, found {t.text or 'end of input'!r}", {"integer"})
        if not INT64_MIN <= v <= INT64_MAX:
            self.fail("integer out of 64-bit range", tok=t)
        return v

    def var(self, tok: Token) -> str:
        if tok.text not in self.declared:
            self.fail(f"undeclared variable {tok.text}", tok=tok)
        return tok.text

    def optional_semi(self) -> None:
        if self.at(";"):
            self.advance()

    # file ------------------------------------------------------------------

    def parse(self) -> LitmusSpec:
        while self.tok.kind != "eof":
            t = self.tok
            if self.at("name"):
                self.advance()
                s = self.tok
                if s.kind != "string":
                    self.fail("expected string", {"string"})
                self.advance()
                self.name = s.text[1:-1]
                self.optional_semi()
            elif self.at("init"):
                self.advance()
                self.decl()
                while self.at(","):
                    self.advance()
                    self.decl()
                self.optional_semi()
            elif self.at("bound"):
                self.advance()
                b = self.tok
                self.bound = self.integer()
                if self.bound < 1:
                    self.fail("bound must be positive", tok=b)
                self.optional_semi()
            elif self.at("thread"):
                self.thread()
            elif self.at("assert"):
                self.advance()
                if not self.at("always", "reachable", "finally"):
                    self.fail("expected assertion scope", {"always", "reachable", "finally"})
                scope = self.advance().text
                a = self.assertion()
                self.expect(";")
                self.assertions.append((scope, a, t))
            else:
                self.fail(
                    f"unexpected {t.text!r}", {"name", "init", "bound", "thread", "assert"}
                )
        for scope, a, t in self.assertions:
            self.check_assertion(a, t)
        return LitmusSpec(
            self.name,
            tuple(self.declared.items()),
            tuple((tid, th.body) for tid, th in sorted(self.threads.items())),
            tuple((s, a) for s, a, _ in self.assertions),
            self.bound,
        )

    def decl(self) -> None:
        t = self.ident("variable")
        if t.text in self.declared:
            self.fail(f"variable {t.text} declared twice", tok=t)
        self.expect("=")
        self.declared[t.text] = self.integer()

    def thread(self) -> None:
        self.expect("thread")
        t = self.tok
        if t.kind != "int":
            self.fail("expected thread id", {"integer"})
        self.advance()
        tid = int(t.text)
        if tid == 0:
            self.fail("thread id 0 is reserved for initialising writes", tok=t)
        if tid in self.threads:
            self.fail(f"thread {tid} defined twice", tok=t)
        self.labels = []
        body = self.block()
        self.threads[tid] = _Thread(tid, body, self.labels)

    def block(self) -> Command:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unexpected end of input", {"}"})
            stmts.append(self.stmt())
        self.advance()
        return seq(*stmts)

    # statements ------------------------------------------------------------

    def stmt(self) -> Command:
        t = self.tok
        pos = (t.line, t.col)
        if self.at("@"):
            self.advance()
            name = self.ident("label")
            if name.text in self.labels:
                self.fail(f"duplicate label @{name.text}", tok=name)
            self.labels.append(name.text)
            self.expect(":")
            return Label(name.text, self.stmt(), pos)
        if self.at("skip"):
            self.advance()
            self.expect(";")
            return Skip(pos)
        if self.at("swap"):
            self.advance()
            self.expect("(")
            x = self.var(self.ident("variable"))
            self.expect(",")
            n = self.integer()
            self.expect(")")
            self.expect(";")
            return Swap(x, n, pos)
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse: Command = Skip(pos)
            if self.at("else"):
                self.advance()
                orelse = self.block()
            return If(cond, then, orelse, pos)
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return While(cond, self.block(), None, pos)
        if t.kind == "ident" and t.text not in KEYWORDS:
            x = self.var(self.advance())
            self.expect(":=")
            ann = RLX
            if self.at("["):
                self.advance()
                self.expect("rel")
                self.expect("]")
                ann = REL
            e = self.expr()
            self.expect(";")
            return Assign(x, ann, e, pos)
        self.fail(
            f"unexpected {t.text or 'end of input'!r}",
            {"@", "skip", "swap", "if", "while", "variable"},
        )

    # expressions -----------------------------------------------------------

    _LEVELS = [
        {"||": "or"},
        {"&&": "and"},
        {"==": "eq", "!=": "neq"},
        {"<": "lt"},
        {"+": "add", "-": "sub"},
    ]

    def expr(self, level: int = 0) -> Expr:
        if level == len(self._LEVELS):
            return self.unary()
        ops = self._LEVELS[level]
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.advance()
            right = self.expr(level + 1)
            left = Binary(ops[t.text], left, right, (t.line, t.col))
        return left

    def unary(self) -> Expr:
        t = self.tok
        pos = (t.line, t.col)
        if self.at("!"):
            self.advance()
            return Unary("not", self.unary(), pos)
        if self.at("-"):
            self.advance()
            if self.tok.kind == "int":
                v = -int(self.advance().text)
                if v < INT64_MIN:
                    self.fail("integer out of 64-bit range", tok=t)
                return Lit(v, pos)
            return Unary("neg", self.unary(), pos)
        if t.kind == "int":
            self.advance()
            v = int(t.text)
            if v > INT64_MAX:
                self.fail("integer out of 64-bit range", tok=t)
            return Lit(v, pos)
        if self.at("true", "false"):
            self.advance()
            return Lit(1 if t.text == "true" else 0, pos)
        if self.at("acq"):
            self.advance()
            self.expect("(")
            x = self.var(self.ident("variable"))
            self.expect(")")
            return VarRead(x, ACQ, pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            return VarRead(self.var(t), RLX, pos)
        self.fail(
            f"unexpected {t.text or 'end of input'!r} in expression",
            {"integer", "variable", "acq", "(", "!", "-", "true", "false"},
        )

    # assertions ------------------------------------------------------------

    def assertion(self) -> Assertion:
        left = self.a_or()
        if self.at("->"):
            self.advance()
            return Implies(left, self.assertion())
        return left

    def a_or(self) -> Assertion:
        left = self.a_and()
        while self.at("||"):
            self.advance()
            left = Or(left, self.a_and())
        return left

    def a_and(self) -> Assertion:
        left = self.a_not()
        while self.at("&&"):
            self.advance()
            left = And(left, self.a_not())
        return left

    def a_not(self) -> Assertion:
        if self.at("!"):
            self.advance()
            return Not(self.a_not())
        if self.at("("):
            self.advance()
            a = self.assertion()
            self.expect(")")
            return a
        return self.atom()

    def tid(self) -> int:
        t = self.tok
        if t.kind != "int":
            self.fail("expected thread id", {"integer"})
        self.advance()
        return int(t.text)

    def atom(self) -> Assertion:
        if self.at("true", "false"):
            return Const(self.advance().text == "true")
        if self.at("at"):
            self.advance()
            self.expect("(")
            t = self.tid()
            self.expect(",")
            self.expect("@")
            label = self.ident("label").text
            self.expect(")")
            return At(t, label)
        if self.at("detval"):
            self.advance()
            self.expect("(")
            t = self.tid()
            self.expect(",")
            x = self.var(self.ident("variable"))
            self.expect(",")
            v = self.integer()
            self.expect(")")
            return DetVal(t, x, v)
        if self.at("varord"):
            self.advance()
            self.expect("(")
            x = self.var(self.ident("variable"))
            self.expect(",")
            y = self.var(self.ident("variable"))
            self.expect(")")
            return VarOrd(x, y)
        if self.at("updonly"):
            self.advance()
            self.expect("(")
            x = self.var(self.ident("variable"))
            self.expect(")")
            return UpdateOnly(x)
        if self.at("last"):
            self.advance()
            self.expect("(")
            x = self.var(self.ident("variable"))
            self.expect(")")
            self.expect("==")
            return OutcomeEq(x, self.integer())
        self.fail(
            f"unexpected {self.tok.text or 'end of input'!r} in assertion",
            {"at", "detval", "varord", "updonly", "last", "true", "false", "!", "("},
        )

    def check_assertion(self, a: Assertion, tok: Token) -> None:
        if isinstance(a, Not):
            self.check_assertion(a.arg, tok)
        elif isinstance(a, (And, Or, Implies)):
            self.check_assertion(a.left, tok)
            self.check_assertion(a.right, tok)
        elif isinstance(a, (At, DetVal)):
            if a.tid not in self.threads:
                self.fail(f"assertion names unknown thread {a.tid}", tok=tok)
            if isinstance(a, At) and a.label not in self.threads[a.tid].labels:
                self.fail(f"thread {a.tid} has no label @{a.label}", tok=tok)


def parse(text: str) -> LitmusSpec:
    """Parse litmus text into a spec; raises ParseError."""
    return _Parser(text).parse()


def parse_expr(text: str, variables=()) -> Expr:
    """Parse a lone expression over ``variables`` (testing helper)."""
    p = _Parser(text)
    p.declared = {x: 0 for x in variables}
    e = p.expr()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r} after expression")
    return e


__all__ = ["ParseError", "parse", "parse_expr", "tokenize", "free_vars"]
