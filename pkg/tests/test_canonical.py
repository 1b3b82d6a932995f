from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from disjinv import canonical as cn
from disjinv.canonical import BREAK, SKIP, BranchExplosionError, canonicalize, make_branch, prune_branches
from disjinv.loop_ir import Assign, Break, Cmp, If, Nondet, Not, parse, parse_pap
from disjinv.oracle import execute
from disjinv.polyhedra import Constraint, GEQ, LinearExpr, Polyhedron

from helpers import dnf_of, program

XY = ("x", "y")
GRID = [dict(zip(XY, map(Fraction, pt))) for pt in product(range(-3, 4), repeat=2)]


def body_of(text, vars_=XY):
    src = "vars %s;\nwhile (true) {\n%s\n}\n" % (", ".join(vars_), text)
    return parse(src).top_loop.body


def outcomes_canonical(bs, state):
    out = set()
    for b in bs:
        if Polyhedron(b.vars, b.cond).contains_point(state):
            nxt = b.apply(state)
            out.add((tuple(nxt[v] for v in b.vars), b.exit is BREAK))
    return out


def outcomes_direct(body, vars_, state):
    return set(execute(body, vars_, tuple(state[v] for v in vars_)))


def same_as_cond(b, text, vars_=XY):
    return all(Polyhedron(vars_, b.cond).contains_point(s) == bool(dnf_of(text, vars_)[0].contains_point(s))
               for s in GRID)


def test_fig1_body_splits_on_pre_state(fig1):
    bs = canonicalize(fig1.top_loop.body, fig1.vars)
    assert len(bs) == 2
    hi = next(b for b in bs if Polyhedron(b.vars, b.cond).contains_point({"x": 50, "y": 0}))
    lo = next(b for b in bs if b is not hi)
    assert hi.apply({"x": Fraction(60), "y": Fraction(7)}) == {"x": 61, "y": 8}
    assert lo.apply({"x": Fraction(3), "y": Fraction(7)}) == {"x": 4, "y": 7}
    assert not Polyhedron(hi.vars, hi.cond).contains_point({"x": 49, "y": 0})
    assert Polyhedron(lo.vars, lo.cond).contains_point({"x": 49, "y": 0})
    assert not Polyhedron(lo.vars, lo.cond).contains_point({"x": 50, "y": 0})
    assert {b.exit for b in bs} == {SKIP}


def test_single_break():
    (b,) = canonicalize(body_of("break;"), XY)
    assert b.cond == () and b.exit is BREAK
    assert b.apply({"x": Fraction(2), "y": Fraction(-1)}) == {"x": 2, "y": -1}


def test_condition_is_substituted_into_pre_state():
    bs = canonicalize(body_of("x = x + 1; if (x > 0) { y = y + 1; }"), XY)
    assert len(bs) == 2
    inc = next(b for b in bs if b.update["y"] == LinearExpr.var("y") + 1)
    keep = next(b for b in bs if b is not inc)
    assert same_as_cond(inc, "x >= 0")
    assert same_as_cond(keep, "x <= -1")
    assert inc.update["x"] == keep.update["x"] == LinearExpr.var("x") + 1


def test_sequential_assignments_become_simultaneous():
    (b,) = canonicalize(body_of("x = x + 1; y = x;"), XY)
    assert b.apply({"x": Fraction(4), "y": Fraction(0)}) == {"x": 5, "y": 5}


def test_break_branch_stops_composition():
    bs = canonicalize(body_of("if (x > 0) { break; } x = x + 2;"), XY)
    brk = [b for b in bs if b.exit is BREAK]
    assert len(brk) == 1 and brk[0].apply({"x": Fraction(1), "y": Fraction(0)}) == {"x": 1, "y": 0}


def test_nondet_keeps_both_branches_unconditionally():
    bs = canonicalize(body_of("if (nondet()) { x = x + 1; } else { y = y + 1; }"), XY)
    assert len(bs) == 2 and all(b.cond == () for b in bs)


def test_contradictory_composition_is_dropped():
    bs = canonicalize(body_of("if (x > 0) { x = x - 5; if (x < -10) { y = 1; } }"), XY)
    assert all(b.update["y"] == LinearExpr.var("y") for b in bs)


def test_prune_drops_branch_incompatible_with_guard(fig1):
    empty = make_branch((Constraint(LinearExpr.var("x") - 1, GEQ), Constraint(-LinearExpr.var("x"), GEQ)),
                        {}, SKIP, XY)
    bs = canonicalize(fig1.top_loop.body, fig1.vars)
    kept = prune_branches(list(bs) + [empty], fig1.top_loop.guard)
    assert kept == list(bs)
    # a guard that rules out the upper branch
    assert len(prune_branches(bs, parse_pap("x < 30", XY))) == 1


def test_branch_cap():
    text = "\n".join(f"if (nondet()) {{ y = y + {i}; }} else {{ y = y - {i}; }}" for i in range(9))
    with pytest.raises(BranchExplosionError):
        canonicalize(body_of(text), XY)


def test_corpus_bodies_have_branches():
    from disjinv import corpus
    for name in corpus.names():
        p = program(name)
        from disjinv.loop_ir import contains_loop
        if contains_loop(p.top_loop.body):
            continue
        assert cn.from_program(p).branches


# random loop bodies --------------------------------------------------------

def exprs():
    coeff = st.integers(-2, 2)
    return st.builds(lambda a, b, c: LinearExpr({k: Fraction(v) for k, v in (("x", a), ("y", b)) if v}, Fraction(c)),
                     coeff, coeff, st.integers(-3, 3))


def conds():
    atom = st.builds(Cmp, exprs(), st.sampled_from(["<", "<=", ">", ">=", "==", "!="]), exprs())
    return st.one_of(atom, st.builds(Not, atom), st.just(Nondet()))


def stmts(depth):
    assign = st.one_of(
        st.builds(lambda t, e: Assign((t,), (e,)), st.sampled_from(XY), exprs()),
        st.builds(lambda e, f: Assign(XY, (e, f)), exprs(), exprs()),
    )
    leaf = st.one_of(assign, assign, st.just(Break()))
    if depth == 0:
        return leaf
    block = st.lists(stmts(depth - 1), max_size=2).map(tuple)
    return st.one_of(leaf, st.builds(If, conds(), block, block))


@settings(max_examples=150, deadline=None)
@given(st.lists(stmts(2), min_size=1, max_size=3).map(tuple))
def test_canonical_form_matches_direct_execution(body):
    bs = canonicalize(body, XY)
    for s in GRID:
        assert outcomes_canonical(bs, s) == outcomes_direct(body, XY, s)
