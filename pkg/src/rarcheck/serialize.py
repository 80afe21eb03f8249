"""JSON execution format and Graphviz export."""

from __future__ import annotations

import json
from typing import Any

from .core import KINDS, C11State, Event, bits_of, canonical_sb, make_state


class FormatError(ValueError):
    pass


def _tag(t) -> list[int]:
    return [t[0], t[1]]


def state_to_dict(state: C11State) -> dict[str, Any]:
    events = []
    for e in state.events:
        d: dict[str, Any] = {"tag": _tag(e.tag), "kind": e.kind, "var": e.var}
        if e.rdval is not None:
            d["rdval"] = e.rdval
        if e.wrval is not None:
            d["wrval"] = e.wrval
        events.append(d)
    return {
        "events": events,
        "sb": [[_tag(a), _tag(b)] for a, b in sorted(state.sb)],
        "rf": [[_tag(a), _tag(b)] for a, b in sorted(state.rf)],
        "mo": {x: [_tag(t) for t in seq] for x, seq in state.mo},
    }


def dumps(state: C11State) -> str:
    return json.dumps(state_to_dict(state), indent=1) + "\n"


def _parse_tag(obj, where: str):
    if (
        not isinstance(obj, list)
        or len(obj) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in obj)
    ):
        raise FormatError(f"{where}: tag must be a [tid, index] pair of integers")
    return (obj[0], obj[1])


def _parse_pairs(obj, where: str):
    if not isinstance(obj, list):
        raise FormatError(f"{where} must be a list of pairs")
    out = []
    for i, p in enumerate(obj):
        if not isinstance(p, list) or len(p) != 2:
            raise FormatError(f"{where}[{i}] must be a pair of tags")
        out.append((_parse_tag(p[0], f"{where}[{i}]"), _parse_tag(p[1], f"{where}[{i}]")))
    return out


def state_from_dict(data: Any) -> C11State:
    """Build a candidate execution; ``sb`` may be omitted for the tag order."""
    if not isinstance(data, dict):
        raise FormatError("execution must be a JSON object")
    unknown = set(data) - {"events", "sb", "rf", "mo"}
    if unknown:
        raise FormatError(f"unknown keys {sorted(unknown)}")
    raw_events = data.get("events")
    if not isinstance(raw_events, list):
        raise FormatError("events must be a list")
    events = []
    seen = set()
    for i, d in enumerate(raw_events):
        if not isinstance(d, dict):
            raise FormatError(f"events[{i}] must be an object")
        tag = _parse_tag(d.get("tag"), f"events[{i}]")
        if tag in seen:
            raise FormatError(f"events[{i}]: duplicate tag {list(tag)}")
        seen.add(tag)
        kind = d.get("kind")
        if kind not in KINDS:
            raise FormatError(f"events[{i}]: kind must be one of {list(KINDS)}")
        var = d.get("var")
        if not isinstance(var, str) or not var:
            raise FormatError(f"events[{i}]: var must be a non-empty string")
        for k in ("rdval", "wrval"):
            if k in d and (not isinstance(d[k], int) or isinstance(d[k], bool)):
                raise FormatError(f"events[{i}]: {k} must be an integer")
        try:
            events.append(Event(tag[0], tag[1], kind, var, d.get("rdval"), d.get("wrval")))
        except ValueError as exc:
            raise FormatError(f"events[{i}]: {exc}") from None
    sb = canonical_sb(events) if "sb" not in data else _parse_pairs(data["sb"], "sb")
    rf = _parse_pairs(data.get("rf", []), "rf")
    mo_raw = data.get("mo", {})
    if not isinstance(mo_raw, dict):
        raise FormatError("mo must map variables to tag sequences")
    mo = {}
    for x, seq in mo_raw.items():
        if not isinstance(seq, list):
            raise FormatError(f"mo[{x}] must be a list of tags")
        mo[x] = [_parse_tag(t, f"mo[{x}]") for t in seq]
    for a, b in list(sb) + rf:
        if a not in seen or b not in seen:
            raise FormatError(f"relation names unknown event {list(a if a not in seen else b)}")
    for x, seq in mo.items():
        for t in seq:
            if t not in seen:
                raise FormatError(f"mo[{x}] names unknown event {list(t)}")
    return make_state(events, sb, rf, mo)


def loads(text: str) -> C11State:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return state_from_dict(data)


# ---------------------------------------------------------------------------
# DOT
# ---------------------------------------------------------------------------


def _node_label(e: Event) -> str:
    if e.kind == "updRA":
        val = f"{e.rdval}>{e.wrval}"
    elif e.is_read:
        val = str(e.rdval)
    else:
        val = str(e.wrval)
    return f"{e.tid}:{e.kind} {e.var}={val}"


def _node_id(e: Event) -> str:
    return f"e{e.tid}_{e.index}"


def _immediate(rows: list[int]) -> list[int]:
    """Transitive reduction of an acyclic, transitively closed relation."""
    out = []
    for row in rows:
        indirect = 0
        for j in bits_of(row):
            indirect |= rows[j]
        out.append(row & ~indirect)
    return out


def export_dot(state: C11State, *, derived: bool = False) -> str:
    """Deterministic DOT text.  sb and mo are drawn as immediate edges."""
    r = state.rel
    lines = ["digraph execution {", "  node [shape=box, fontname=monospace];"]
    for e in state.events:
        lines.append(f'  {_node_id(e)} [label="{_node_label(e)}"];')

    def edges(rows, style: str, name: str) -> None:
        for i, row in enumerate(rows):
            for j in bits_of(row):
                a, b = r.events[i], r.events[j]
                lines.append(f'  {_node_id(a)} -> {_node_id(b)} [label="{name}", {style}];')

    edges(_immediate(r.sb), "style=solid", "sb")
    edges(r.rf, "style=dashed", "rf")
    edges(_immediate(r.mo), "style=dotted", "mo")
    if derived:
        edges(r.sw, "style=bold", "sw")
        edges(r.fr, "color=red", "fr")
    lines.append("}")
    return "\n".join(lines) + "\n"
