import pytest
from hypothesis import given, settings, strategies as st

from conftest import PROGRAMS
from oracles import accepts_lasso, all_lassos
from termdec.automata import program_to_buchi
from termdec.frontend import ParseError, parse_cfg, parse_program, render_cfg
from termdec.linear import Atom, LinearTerm
from termdec.program import Statement

i, j = LinearTerm.var("i"), LinearTerm.var("j")


def load(name):
    path = PROGRAMS / name
    return parse_program(path.read_text(), "cfg" if name.endswith(".cfg") else "wprog")


def test_sort_has_the_expected_shape():
    p = load("sort.wprog")
    assert len(p.locations) == 5
    assert Statement.assume([Atom.ge(i, 1)]) in p.alphabet
    assert Statement.assign("j", j + 1) in p.alphabet
    assert Statement.assign("i", i - 1) in p.alphabet


def test_sort_in_both_syntaxes_has_the_same_traces():
    a, b = program_to_buchi(load("sort.wprog")), program_to_buchi(load("sort.cfg"))
    assert a.alphabet == b.alphabet
    for u, v in all_lassos(a.alphabet, 2, 4):
        assert accepts_lasso(a, u, v) == accepts_lasso(b, u, v)


@pytest.mark.parametrize("path", sorted(p.name for p in PROGRAMS.iterdir()))
def test_render_round_trips(path):
    p = load(path)
    q = parse_cfg(render_cfg(p))
    assert q == p


def test_disequality_becomes_two_edges():
    p = parse_program("int x; while (x != 0) { x := x - 1; }", "wprog")
    guards = [st for st in p.alphabet if st.kind == "assume"]
    assert len(guards) == 2


def test_nondeterministic_branch():
    p = parse_program("int x; while (x > 0) { if (*) { x--; } else { x := x - 2; } }", "wprog")
    assert Statement.assume(()) in p.alphabet


def test_straight_line_program_has_no_edges():
    p = load("straight.wprog")
    assert p.edges == () and p.locations == (p.initial,)


def test_declarations_and_parameters():
    p = parse_program("program f(int a, int b) { int c := a + b, d; while (c > d) { c--; } }", "wprog")
    assert {"a", "b", "c", "d"} <= p.variables


@pytest.mark.parametrize("src", [
    "while (x > 0) { x := x * y; }",
    "while (x > 0 { x--; }",
    "x := ;",
    "if (x > 0) { x--; ",
])
def test_malformed_while_programs(src):
    with pytest.raises(ParseError):
        parse_program(src, "wprog")


@pytest.mark.parametrize("src", [
    "l0 -> l1 : x := 1;",
    "init l0; l0 -> l1 : assume x != 1;",
    "init l0; loc l0; l0 -> l9 : x := 1;",
])
def test_malformed_cfgs(src):
    with pytest.raises(ParseError):
        parse_cfg(src)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as e:
        parse_program("int x;\nwhile (x > 0) {\n  x := x * x;\n}", "wprog")
    assert e.value.line == 3


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(-3, 3), st.integers(0, 3)),
                min_size=1, max_size=6))
def test_generated_cfgs_round_trip(edges):
    lines = ["init l0;"]
    for s, k, d in edges:
        lines.append(f"l{s} -> l{d} : x := x + {k};" if k >= 0 else f"l{s} -> l{d} : assume x <= {k};")
    p = parse_cfg("\n".join(lines))
    assert parse_cfg(render_cfg(p)) == p
