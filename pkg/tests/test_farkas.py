from fractions import Fraction

import pytest

from disjinv.ats import Ats, InitPart, Location, LocKind, Transition, build_ats, prime
from disjinv.canonical import from_program
from disjinv.farkas import (SolverOptions, Template, check_inductive, consec_tabular, derive_exit,
                            incremental_strengthen, init_tabular, solve_all, solve_location)
from disjinv.polyhedra import (EQ, GEQ, Constraint, LinearExpr, Polyhedron, constraints_to_generators, dnf_equivalent,
                               dnf_includes, equivalent)

from helpers import dnf_of, program

XY = ("x", "y")


def ats_of(name, theta=None):
    p = program(name)
    return build_ats(from_program(p), p.init if theta is None else theta), p


def by_id(ats, ident):
    return next(l for l in ats.locations if l.id == ident)


def same(dnf, text, vars_, integer=False):
    return dnf_equivalent(dnf, dnf_of(text, vars_), integer=integer)


def single_space(vars_, text):
    (p,) = dnf_of(text, vars_)
    return p


# tabulars -------------------------------------------------------------------

def test_init_tabular_running_example():
    loc = Location("l2")
    tpl = Template.of(loc, XY)
    got = init_tabular(single_space(XY, "x == 0 && y == 50"), tpl)
    c1, c2, d = tpl.unknowns
    want = Polyhedron(tpl.unknowns, (Constraint(LinearExpr({c2: Fraction(50), d: Fraction(1)}), GEQ),))
    assert equivalent(got, want)


def test_init_tabular_universe():
    tpl = Template.of(Location("l1"), XY)
    got = init_tabular(Polyhedron.universe(XY), tpl)
    c1, c2, d = tpl.unknowns
    want = Polyhedron(tpl.unknowns, (Constraint(LinearExpr.var(c1), EQ), Constraint(LinearExpr.var(c2), EQ),
                                     Constraint(LinearExpr.var(d), GEQ)))
    assert equivalent(got, want)


def test_init_tabular_single_point():
    tpl = Template.of(Location("l1"), ("x",))
    (c,), d = tpl.coeffs, tpl.const
    got = init_tabular(single_space(("x",), "x == 5"), tpl)
    want = Polyhedron(tpl.unknowns, (Constraint(LinearExpr({c: Fraction(5), d: Fraction(1)}), GEQ),))
    assert equivalent(got, want)


def test_consecution_into_upper_branch_admits_diagonal():
    ats, _ = ats_of("fig1")
    l1, l2 = by_id(ats, "l1"), by_id(ats, "l2")
    (t,) = [t for t in ats.transitions if t.src == l2 and t.dst == l1]
    src, dst = Template.of(l2, XY), Template.of(l1, XY)
    space = consec_tabular(t, XY, src, dst, Fraction(1))

    def point(dd):
        vals = dict(zip(src.unknowns, (0, -1, 50)))
        vals.update(zip(dst.unknowns, (1, -1, dd)))
        return {k: Fraction(v) for k, v in vals.items()}

    assert space.contains_point(point(0))         # 50 - y >= 0 yields x' - y' >= 0
    assert not space.contains_point(point(-1))    # but not x' - y' >= 1


def _self_loop(vars_, guard_text):
    loc = Location("l1")
    XP = tuple(prime(v) for v in vars_)
    names = {v + "p": prime(v) for v in vars_}
    (g,) = dnf_of(guard_text, vars_ + tuple(v + "p" for v in vars_))
    guard = Polyhedron(vars_ + XP, tuple(c.rename(names) for c in g.constraints))
    return loc, Transition(loc, loc, guard)


def test_mu_zero_is_local_to_the_guard():
    loc, t = _self_loop(("x",), "xp == x")
    tpl = Template.of(loc, ("x",))
    got = consec_tabular(t, ("x",), tpl, tpl, Fraction(0))
    (c,), d = tpl.coeffs, tpl.const
    want = Polyhedron(tpl.unknowns, (Constraint(LinearExpr.var(c), EQ), Constraint(LinearExpr.var(d), GEQ)))
    assert equivalent(got, want)


def test_mu_one_identity_update_is_tautological():
    loc, t = _self_loop(("x",), "xp == x")
    tpl = Template.of(loc, ("x",))
    got = consec_tabular(t, ("x",), tpl, tpl, Fraction(1))
    assert equivalent(got, Polyhedron.universe(tpl.unknowns))


def test_unsat_row_solutions_scale_up():
    ats, _ = ats_of("fig1")
    l1 = by_id(ats, "l1")
    (t,) = [t for t in ats.transitions if t.src == l1 and t.dst == l1]
    tpl = Template.of(l1, XY)
    space = consec_tabular(t, XY, tpl, tpl, Fraction(1), with_unsat_row=True)
    gens = constraints_to_generators(space)
    assert gens.points
    # every solution scaled by a factor >= 1 is again a solution
    for g in gens.points:
        pt = dict(zip(gens.vars, g.coords))
        for k in (1, 2, 5):
            assert space.contains_point({v: k * x for v, x in pt.items()})


# solving --------------------------------------------------------------------

def test_solve_running_example_location_by_location():
    ats, _ = ats_of("fig1")
    l1, l2 = by_id(ats, "l1"), by_id(ats, "l2")
    inv2 = solve_location(ats, l2, {})
    assert same(inv2, "y == 50 && 0 <= x && x <= 49", XY)
    inv1 = solve_location(ats, l1, {l2: inv2})
    assert same(inv1, "x == y && 50 <= x && x <= 99", XY)


def test_solve_all_running_example():
    ats, _ = ats_of("fig1")
    aam = solve_all(ats)
    assert same(aam[by_id(ats, "l2")], "y == 50 && 0 <= x && x <= 49", XY)
    assert same(aam[by_id(ats, "l1")], "x == y && 50 <= x && x <= 99", XY)
    assert same(aam[ats.exit], "x == 100 && y == 100", XY)
    assert check_inductive(ats, aam)


def test_vacuous_location_gets_universe():
    loc, t = _self_loop(("x",), "xp == x + 1")
    other = Location("l2", LocKind.BRANCH, 1)
    ext = Location("le", LocKind.TERMINATION)
    ats = Ats(("x",), (loc, other, ext), (t,), (InitPart(loc, single_space(("x",), "x == 0")),))
    (inv,) = solve_location(ats, other, {})
    assert equivalent(inv, Polyhedron.universe(("x",)))


def test_empty_theta_leaves_everything_unreachable():
    ats, _ = ats_of("fig1", theta=[])
    aam = solve_all(ats)
    assert all(v == [] for v in aam.values())


def test_gopan_head_and_exit():
    ats, _ = ats_of("gopan07")
    aam = solve_all(ats)
    head = [p for l in ats.branch_locations for p in aam[l]]
    # equal on integer points; the solver keeps one extra single-point piece x=102, y=0
    assert same(head, "(x == y && 0 <= x && x <= 50) || (x + y == 102 && 51 <= x && x <= 102)", XY, integer=True)
    assert same(aam[ats.exit], "x == 102 && y == -1", XY)


def test_halbwachs_exit():
    ats, _ = ats_of("halbwachs")
    aam = solve_all(ats)
    want = "(101 <= x && x <= 102 && 0 <= y && y + 2 <= x) || (x == 101 && 1 <= y && y <= 101)"
    assert same(derive_exit(ats, aam), want, XY)


def test_exit_empty_without_exit_transitions():
    loc, t = _self_loop(("x",), "xp == x + 1")
    ext = Location("le", LocKind.TERMINATION)
    ats = Ats(("x",), (loc, ext), (t,), (InitPart(loc, single_space(("x",), "x == 0")),))
    aam = solve_all(ats)
    assert aam[ext] == []
    assert same(aam[loc], "x >= 0", ("x",))


# checking -------------------------------------------------------------------

def test_check_accepts_weakened_upper_branch():
    ats, _ = ats_of("fig1")
    aam = solve_all(ats)
    aam[by_id(ats, "l1")] = [Polyhedron.universe(XY)]
    aam[ats.exit] = [Polyhedron.universe(XY)]
    assert check_inductive(ats, aam)


def test_check_rejects_tightened_lower_branch():
    ats, _ = ats_of("fig1")
    aam = solve_all(ats)
    l2 = by_id(ats, "l2")
    aam[l2] = dnf_of("y == 50 && x == 0", XY)
    res = check_inductive(ats, aam)
    assert not res
    assert "l2->l2" in res.failing


# strengthening --------------------------------------------------------------

def test_one_round_is_plain_solving():
    ats, _ = ats_of("fig1")
    a, b = solve_all(ats), incremental_strengthen(ats, 1)
    assert set(a) == set(b)
    assert all(dnf_equivalent(a[l], b[l]) for l in a)
    with pytest.raises(ValueError):
        incremental_strengthen(ats, 0)


def test_eudiv_second_round():
    ats, p = ats_of("eudiv")
    aam = incremental_strengthen(ats, 2)
    head = [q for l in ats.branch_locations for q in aam[l]]
    want = dnf_of("r >= b && b >= 1 && a >= q + r && q >= 0", p.vars)
    assert dnf_includes(want, head, integer=True)
    assert check_inductive(ats, aam)


def test_mu_two_adds_nothing_on_running_example():
    ats, _ = ats_of("fig1")
    base = solve_all(ats)
    more = solve_all(ats, SolverOptions(mu=(Fraction(0), Fraction(1), Fraction(2))))
    for l in ats.locations:
        assert dnf_includes(more[l], base[l])


@pytest.mark.parametrize("name", ["fig1", "popl07", "gopan07", "halbwachs", "gulwani07", "cav06", "ex1", "ex2",
                                  "henry_fig1", "fig2", "fig1a"])
def test_solved_maps_are_inductive_without_sampling(name):
    ats, _ = ats_of(name)
    res = check_inductive(ats, solve_all(ats))
    assert res and res.method != "sampling"
