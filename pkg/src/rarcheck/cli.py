"""Command-line front end.

Exit codes: 0 success, 1 violation or failed check, 2 exploration cut off
by the default bound with nothing violated, 3 unreadable input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .assertions import eval_assertion
from .core import C11State
from .equiv import sweep
from .explorer import Checks, Configuration, explore, initial, outcome, successors
from .lang import SKIP, LitmusSpec, Program
from .parser import ParseError, parse
from .serialize import FormatError, export_dot, loads, state_to_dict
from .validity import (
    TRUNCATED,
    NotACandidate,
    check_validity,
    check_weak_canonical,
    enumerate_candidates,
    replay,
)

DEFAULT_BOUND = 16

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_TRUNCATED = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


class _Out:
    def __init__(self, stream, color: bool):
        self.stream = stream
        self.color = color

    def line(self, text: str = "") -> None:
        print(text, file=self.stream)

    def verdict(self, ok: bool) -> str:
        word = "PASS" if ok else "FAIL"
        if not self.color:
            return word
        return f"\x1b[{32 if ok else 31}m{word}\x1b[0m"


def corpus_names() -> list[str]:
    return sorted(p.name for p in resources.files("rarcheck").joinpath("corpus").iterdir() if p.is_file())


def resolve(path: str) -> str:
    """Read ``path``, falling back to the bundled corpus by file name."""
    p = Path(path)
    if p.is_file():
        return p.read_text()
    bundled = resources.files("rarcheck").joinpath("corpus", p.name)
    if bundled.is_file():
        return bundled.read_text()
    raise InputError(f"{path}: no such file (bundled: {', '.join(corpus_names())})")


def load_spec(path: str) -> LitmusSpec:
    text = resolve(path)
    try:
        return parse(text)
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from None


def load_state(path: str) -> C11State:
    text = resolve(path)
    try:
        return loads(text)
    except FormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _checks(names: str) -> Checks:
    chosen = {n.strip() for n in names.split(",") if n.strip()}
    if "all" in chosen:
        return Checks.all()
    unknown = chosen - {"validity", "lemmas", "audit", "none"}
    if unknown:
        raise InputError(f"unknown check {sorted(unknown)[0]!r}")
    return Checks("validity" in chosen, "lemmas" in chosen, "audit" in chosen)


def _state_after(spec: LitmusSpec, trace) -> C11State:
    c = initial(spec)
    for label in trace:
        c = next(nxt for lab, nxt in successors(c) if lab == label)
    return c.state


def _bound(spec: LitmusSpec, flag: Optional[int]) -> tuple[int, bool]:
    """Event bound and whether it was asked for explicitly."""
    if flag is not None:
        return flag, True
    if spec.bound is not None:
        return spec.bound, True
    return DEFAULT_BOUND, False


def cmd_explore(args, out: _Out) -> int:
    spec = load_spec(args.file)
    bound, explicit = _bound(spec, args.max_events)
    checks = _checks(args.checks)
    res = explore(spec, bound, args.mode, checks=checks)
    out.line(f"program: {spec.name}")
    out.line(f"bound: {bound} events ({'requested' if explicit else 'default'})")
    out.line(f"states: {res.states}  transitions: {res.transitions}  final: {res.final_states}")
    out.line(f"truncated: {'yes' if res.truncated else 'no'}")
    for scope, a in spec.assertions:
        failed = any(v.assertion is a for v in res.violations)
        out.line(f"{out.verdict(not failed)} assert {scope} {a}")
    for v in res.violations:
        out.line(f"violation ({v.scope}) {v.assertion}{': ' + v.message if v.message else ''}")
        for lab in v.trace:
            out.line(f"  {lab}")
    for a, trace in res.witnesses:
        out.line(f"witness for {a}:")
        for lab in trace:
            out.line(f"  {lab}")
    if checks.audit:
        counts = ", ".join(f"{k}={res.audit_counts[k]}" for k in sorted(res.audit_counts))
        out.line(f"rule audit: {counts or 'no instances'}; violations: {len(res.audit_violations)}")
        for r in res.audit_violations[:10]:
            out.line(f"  {r.rule}: {r.instance} at {r.transition}")
    if checks.validity or checks.lemmas:
        out.line(f"oracle failures: {len(res.oracle_failures)}")
        for f in res.oracle_failures[:10]:
            out.line(f"  {f}")
    out.line("outcomes:")
    for o in sorted(res.outcomes):
        out.line("  " + " ".join(f"{x}={v}" for x, v in o))
    if args.dot:
        if res.violations and res.violations[0].trace:
            target = _state_after(spec, res.violations[0].trace)
        elif res.witnesses:
            target = _state_after(spec, res.witnesses[0][1])
        else:
            target = initial(spec).state
        Path(args.dot).write_text(export_dot(target, derived=args.derived))
    if not res.ok:
        return EXIT_VIOLATION
    if res.truncated and not explicit:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_check_axioms(args, out: _Out) -> int:
    state = load_state(args.file)
    valid = check_validity(state)
    try:
        weak = check_weak_canonical(state)
    except NotACandidate as exc:
        weak = None
        weak_note = str(exc)
    if args.json:
        data = {
            "validity": {r.name: r.ok for r in valid.results},
            "weak_canonical": None if weak is None else {r.name: r.ok for r in weak.results},
        }
        out.line(json.dumps(data, indent=1, sort_keys=True))
    else:
        left = [f"{out.verdict(r.ok)} {r.name}" for r in valid.results]
        if weak is None:
            right = [f"n/a ({weak_note})"]
        else:
            right = [f"{out.verdict(r.ok)} {r.name}" for r in weak.results]
        width = max(len("validity"), *(len(s) for s in left)) + 4
        out.line("validity".ljust(width) + "weak canonical")
        for i in range(max(len(left), len(right))):
            a = left[i] if i < len(left) else ""
            b = right[i] if i < len(right) else ""
            out.line(a.ljust(width) + b)
        for r in list(valid.results) + (list(weak.results) if weak else []):
            if not r.ok:
                out.line(f"{r.name}: {r.detail}")
    ok = valid.ok and weak is not None and weak.ok
    return EXIT_OK if ok else EXIT_VIOLATION


def _final_program(spec: LitmusSpec) -> Program:
    return Program(tuple((t, SKIP) for t in spec.tids))


def cmd_enumerate(args, out: _Out) -> int:
    spec = load_spec(args.file)
    bound, explicit = _bound(spec, args.max_events)
    done = _final_program(spec)
    complete: list[C11State] = []
    total = 0
    truncated = False
    replay_failures = 0
    for item in enumerate_candidates(spec, bound):
        if item is TRUNCATED:
            truncated = True
            continue
        total += 1
        if item.complete:
            complete.append(item.execution)
        if args.json:
            out.line(json.dumps({"complete": item.complete, "execution": state_to_dict(item.execution)}, sort_keys=True))
        if args.replay:
            rr = replay(spec, item.execution)
            if not rr.ok:
                replay_failures += 1
                out.line(f"replay FAILED at step {rr.failed_index}: {rr.reason}")
    out.line(f"program: {spec.name}")
    out.line(f"bound: {bound} events ({'requested' if explicit else 'default'})")
    out.line(f"valid candidates: {total}  complete: {len(complete)}")
    if truncated:
        out.line("note: the event bound cut off some executions")
    if args.replay:
        out.line(f"replayed: {total}  failures: {replay_failures}")
    failed = replay_failures > 0
    for scope, a in spec.assertions:
        k = sum(1 for s in complete if eval_assertion(Configuration(done, s), a))
        ok = k > 0 if scope == "reachable" else k == len(complete)
        failed |= not ok
        out.line(f"{out.verdict(ok)} assert {scope} {a}: {k} of {len(complete)} complete candidates satisfy it")
    outcomes = sorted({outcome(s, spec.variables) for s in complete})
    out.line("outcomes:")
    for o in outcomes:
        out.line("  " + " ".join(f"{x}={v}" for x, v in o))
    if failed:
        return EXIT_VIOLATION
    if truncated and not explicit:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_equiv(args, out: _Out) -> int:
    rep = sweep(args.max_events, args.vars, args.values, symmetry=not args.no_symmetry)
    for line in rep.lines():
        out.line(line)
    for d in rep.disagreements:
        out.line(f"  disagreement: {d}")
    out.line(out.verdict(rep.ok))
    return EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_dot(args, out: _Out) -> int:
    if args.file.endswith(".lit"):
        state = initial(load_spec(args.file)).state
    else:
        state = load_state(args.file)
    text = export_dot(state, derived=args.derived)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.stream.write(text)
    return EXIT_OK


def cmd_corpus(args, out: _Out) -> int:
    for name in corpus_names():
        out.line(name)
    return EXIT_OK


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _natural(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit 2 means truncation
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rarcheck", description="Bounded checker for release/acquire/relaxed programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explore", help="explore every interleaving within a bound")
    p.add_argument("file")
    p.add_argument("--max-events", type=_positive)
    p.add_argument("--mode", choices=("bfs", "dfs"), default="bfs")
    p.add_argument("--checks", default="none", help="comma list of validity,lemmas,audit or 'all'")
    p.add_argument("--dot", help="write the first counterexample or witness state as DOT")
    p.add_argument("--derived", action="store_true", help="include sw and fr edges in DOT")
    p.set_defaults(run=cmd_explore)

    p = sub.add_parser("check-axioms", help="run both consistency checkers on a JSON execution")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(run=cmd_check_axioms)

    p = sub.add_parser("enumerate", help="list the valid candidate executions of a program")
    p.add_argument("file")
    p.add_argument("--max-events", type=_positive)
    p.add_argument("--replay", action="store_true", help="replay each candidate operationally")
    p.add_argument("--json", action="store_true", help="print each candidate as a JSON line")
    p.set_defaults(run=cmd_enumerate)

    p = sub.add_parser("equiv", help="compare the two consistency checkers exhaustively")
    p.add_argument("--max-events", type=_natural, required=True)
    p.add_argument("--vars", type=_positive, default=1)
    p.add_argument("--values", type=_positive, default=2)
    p.add_argument("--no-symmetry", action="store_true")
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("dot", help="render an execution (or a program's initial state) as DOT")
    p.add_argument("file")
    p.add_argument("--derived", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_dot)

    p = sub.add_parser("corpus", help="list the bundled examples")
    p.set_defaults(run=cmd_corpus)
    return ap


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Out(stdout or sys.stdout, os.environ.get("RAR_COLOR", "0") == "1")
    try:
        return args.run(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
