import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from disjinv import corpus
from disjinv.loop_ir import (And, Cmp, If, InitAssign, NonAffineError, Not, Or, ParseError, UndeclaredVariableError, While,
                             contains_loop, format_program, parse, parse_pap, to_dnf)
from disjinv.oracle import compile_pap
from disjinv.polyhedra import LinearExpr, Polyhedron, equivalent

from helpers import dnf_of


def test_running_example_parses():
    p = parse("vars x, y;\nx = 0; y = 50;\nwhile (x < 100) { x = x + 1; if (x > 50) { y = y + 1; } }\n")
    assert p.vars == ("x", "y")
    assert [type(i) for i in p.init_items] == [InitAssign, InitAssign]
    assert len(p.init) == 1
    assert equivalent(Polyhedron(p.vars, tuple(p.init[0])), dnf_of("x==0 && y==50", p.vars)[0])
    assert isinstance(p.top_loop.body[1], If)


def test_no_init_means_universe():
    p = parse("vars x; while (true) { }")
    assert p.init == [()]


def test_nested_loop_program():
    p = parse(corpus.source("janne_complex"))
    assert contains_loop(p.top_loop.body)
    assert any(isinstance(s, While) for s in p.top_loop.body)


def test_negated_strict_bound_in_integer_mode():
    d = to_dnf(parse_pap("!(x < 100)", ("x",)), "int")
    assert len(d) == 1 and equivalent(Polyhedron(("x",), tuple(d[0])), dnf_of("x>=100", ("x",))[0])


def test_distribution():
    d = to_dnf(parse_pap("(x >= 1 || y >= 1) && x <= 5", ("x", "y")))
    assert len(d) == 2
    assert all(len(c) == 2 for c in d)


def test_range_stays_one_clause():
    d = to_dnf(parse_pap("y>=10 && y<=12", ("y",)))
    assert len(d) == 1 and len(d[0]) == 2


def test_rational_mode_strict_is_kept_distinct():
    p = parse("vars x; mode rat; while (x < 1) { x = x + 1; }")
    assert p.mode == "rat"


def test_errors_carry_positions():
    with pytest.raises(NonAffineError) as e:
        parse("vars x;\nwhile (x < 10) {\n  x = x * x;\n}\n")
    assert e.value.line == 3
    with pytest.raises(UndeclaredVariableError) as e:
        parse("vars x;\nwhile (y < 10) { x = x + 1; }")
    assert (e.value.line, e.value.col) == (2, 8)
    with pytest.raises(ParseError):
        parse("vars x; while (x < 1 && nondet()) { }")
    with pytest.raises(ParseError):
        parse("vars x, x; while (true) { }")


def test_constant_multiplication_and_division_are_affine():
    p = parse("vars x, y; while (x < 10) { x = 2 * x + y / 2; }")
    e = p.top_loop.body[0].exprs[0]
    assert e.coeffs == {"x": 2, "y": Fraction(1, 2)}


@pytest.mark.parametrize("name", corpus.names())
def test_corpus_roundtrips_through_formatter(name):
    p = parse(corpus.source(name))
    assert parse(format_program(p)) == p


# random predicates over two variables, checked pointwise against direct evaluation
VARS = ("x", "y")
exprs = st.builds(lambda a, b, c: LinearExpr({k: Fraction(v) for k, v in (("x", a), ("y", b)) if v}, Fraction(c)),
                  st.integers(-2, 2), st.integers(-2, 2), st.integers(-3, 3))
atoms = st.builds(Cmp, exprs, st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), exprs)
paps = st.recursive(atoms, lambda sub: st.one_of(
    st.builds(lambda xs: And(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
    st.builds(lambda xs: Or(tuple(xs)), st.lists(sub, min_size=2, max_size=3)),
    st.builds(Not, sub)), max_leaves=6)


@settings(max_examples=150, deadline=None)
@given(paps)
def test_dnf_agrees_with_evaluation_on_integers(p):
    d = [Polyhedron(VARS, tuple(c)) for c in to_dnf(p, "int")]
    f = compile_pap(p, VARS)
    for pt in itertools.product(range(-3, 4), repeat=2):
        s = dict(zip(VARS, pt))
        if f(pt):
            assert any(q.contains_point(s) for q in d)


@settings(max_examples=100, deadline=None)
@given(paps)
def test_rational_dnf_over_approximates_evaluation(p):
    # strict comparisons are closed in rational mode, so only one direction holds exactly
    d = [Polyhedron(VARS, tuple(c)) for c in to_dnf(p, "rat")]
    f = compile_pap(p, VARS)
    for pt in itertools.product([Fraction(k, 2) for k in range(-5, 6)], repeat=2):
        s = dict(zip(VARS, pt))
        if f(pt):
            assert any(q.contains_point(s) for q in d)
