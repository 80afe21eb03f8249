from __future__ import annotations

import io
import json

import pytest

from rarcheck.cli import EXIT_INPUT, EXIT_OK, EXIT_TRUNCATED, EXIT_VIOLATION, corpus_names, main
from rarcheck.core import Event, canonical_sb, make_state
from rarcheck.serialize import dumps, state_from_dict


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return _write


# -- explore -----------------------------------------------------------------------


def test_explore_peterson_small_bound():
    code, out = run("explore", "peterson.lit", "--max-events", "8")
    assert code == EXIT_OK
    assert "bound: 8 events (requested)" in out
    assert "FAIL" not in out
    assert out.count("PASS assert always") == 13


def test_explore_reports_violation_with_trace(write):
    f = write("bad.lit", "init x = 0\nthread 1 { x := 1; }\nassert always last(x) == 0;\n")
    code, out = run("explore", f)
    assert code == EXIT_VIOLATION
    assert "FAIL assert always last(x) == 0" in out
    assert "t1: wr1(x,1) observing wr0(x,0)" in out


def test_explore_truncated_at_default_bound(write):
    f = write("spin.lit", "init x = 0\nthread 1 { while (x == 0) { skip; } }\n")
    code, out = run("explore", f)
    assert code == EXIT_TRUNCATED
    assert "bound: 16 events (default)" in out
    assert "truncated: yes" in out
    # a requested bound is a deliberate limit
    assert run("explore", f, "--max-events", "4")[0] == EXIT_OK


def test_explore_witness():
    code, out = run("explore", "mp_relaxed.lit")
    assert code == EXIT_OK
    assert "PASS assert reachable last(r) == 0" in out
    assert "witness for last(r) == 0:" in out


def test_explore_with_all_checks():
    code, out = run("explore", "sb.lit", "--checks", "all")
    assert code == EXIT_OK
    assert "a=0 b=0" in out


def test_explore_syntax_error(write, capsys):
    f = write("broken.lit", "init x = 0\nthread 1 { x := ; }\n")
    assert run("explore", f)[0] == EXIT_INPUT
    assert "broken.lit" in capsys.readouterr().err


def test_missing_file_and_bad_flags(capsys):
    assert run("explore", "nope.lit")[0] == EXIT_INPUT
    assert "no such file" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        run("explore", "sb.lit", "--max-events", "0")
    assert exc.value.code == EXIT_INPUT
    assert run("explore", "sb.lit", "--checks", "bogus")[0] == EXIT_INPUT


def test_explore_dot_output(tmp_path):
    target = tmp_path / "w.dot"
    code, _ = run("explore", "mp_relaxed.lit", "--dot", str(target))
    assert code == EXIT_OK
    dot = target.read_text()
    assert dot.startswith("digraph execution {")
    assert "2:wr r=0" in dot


def test_report_is_deterministic():
    assert run("explore", "sb.lit") == run("explore", "sb.lit")
    assert run("explore", "sb.lit", "--mode", "dfs")[0] == EXIT_OK


def test_color(monkeypatch):
    monkeypatch.setenv("RAR_COLOR", "1")
    _, out = run("check-axioms", "example2.json")
    assert "\x1b[32mPASS\x1b[0m" in out
    monkeypatch.setenv("RAR_COLOR", "0")
    _, out = run("check-axioms", "example2.json")
    assert "\x1b[" not in out


# -- check-axioms ------------------------------------------------------------------


def test_check_axioms_example2():
    code, out = run("check-axioms", "example2.json")
    assert code == EXIT_OK
    assert out.count("PASS") == 10


def test_check_axioms_json():
    code, out = run("check-axioms", "example2.json", "--json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert all(data["validity"].values()) and all(data["weak_canonical"].values())


def test_check_axioms_cycle(write):
    x0 = Event(0, 0, "wr", "x", None, 0)
    r = Event(1, 0, "rd", "x", 1, None)
    w = Event(1, 1, "wr", "x", None, 1)
    s = make_state([x0, r, w], canonical_sb([x0, r, w]), {(w.tag, r.tag)}, {"x": [x0.tag, w.tag]})
    code, out = run("check-axioms", write("cycle.json", dumps(s)), "--json")
    assert code == EXIT_VIOLATION
    data = json.loads(out)
    assert not data["validity"]["Coherence"]
    assert not data["weak_canonical"]["RF"]


def test_check_axioms_non_candidate(write):
    x0 = Event(0, 0, "wr", "x", None, 0)
    r = Event(1, 0, "rd", "x", 0, None)
    s = make_state([x0, r], canonical_sb([x0, r]), set(), {"x": [x0.tag]})
    code, out = run("check-axioms", write("orphan.json", dumps(s)))
    assert code == EXIT_VIOLATION
    assert "FAIL RF-Complete" in out and "n/a" in out


def test_check_axioms_malformed(write):
    assert run("check-axioms", write("bad.json", '{"events": 3}'))[0] == EXIT_INPUT


# -- enumerate -----------------------------------------------------------------------


def test_enumerate_reordering():
    code, out = run("enumerate", "reordering.lit", "--replay")
    assert code == EXIT_OK
    assert "valid candidates: 2  complete: 2" in out
    assert "replayed: 2  failures: 0" in out
    assert "x=5 z=0" in out and "x=5 z=5" in out


def test_enumerate_json_lines():
    code, out = run("enumerate", "lb.lit", "--json")
    assert code == EXIT_OK
    rows = [json.loads(line) for line in out.splitlines() if line.startswith("{")]
    assert len(rows) == 3 and all(r["complete"] for r in rows)
    assert len({dumps(state_from_dict(r["execution"])) for r in rows}) == 3
    assert "PASS assert always" in out


def test_enumerate_empty_program(write):
    code, out = run("enumerate", write("empty.lit", "init x = 0\n"))
    assert code == EXIT_OK
    assert "valid candidates: 1  complete: 1" in out


def test_enumerate_failing_assertion(write):
    f = write("r.lit", "init x = 0\nthread 1 { x := 1; }\nassert reachable last(x) == 0;\n")
    code, out = run("enumerate", f)
    assert code == EXIT_VIOLATION
    assert "FAIL assert reachable" in out


# -- equiv, dot, corpus -----------------------------------------------------------------


def test_equiv_trivial_box():
    code, out = run("equiv", "--max-events", "0")
    assert code == EXIT_OK
    assert "candidates checked: 1" in out
    assert out.rstrip().endswith("PASS")


def test_equiv_small_box_without_symmetry():
    code, out = run("equiv", "--max-events", "2", "--vars", "2", "--no-symmetry")
    assert code == EXIT_OK
    assert "symmetry reduction: off" in out
    assert "disagreements: 0" in out


def test_dot_of_execution_and_program(tmp_path):
    code, out = run("dot", "example2.json")
    assert code == EXIT_OK and out.count("->") == 24
    code, out = run("dot", "peterson.lit")
    assert code == EXIT_OK and "->" not in out
    target = tmp_path / "e.dot"
    assert run("dot", "example2.json", "--derived", "-o", str(target))[0] == EXIT_OK
    assert 'label="sw"' in target.read_text()


def test_corpus_listing():
    code, out = run("corpus")
    assert code == EXIT_OK
    assert out.split() == corpus_names()
    assert "peterson.lit" in out
