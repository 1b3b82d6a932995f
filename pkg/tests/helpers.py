"""Shared test helpers."""

from fractions import Fraction

from hypothesis import strategies as st

from disjinv import corpus
from disjinv.loop_ir import parse, parse_pap, to_dnf
from disjinv.polyhedra import Constraint, EQ, GEQ, LinearExpr, Polyhedron


def program(name):
    return parse(corpus.source(name))


def dnf_of(text, vars_, mode="int"):
    """Polyhedra for a DSL predicate, e.g. ``"x==y && 0<=x"``."""
    return [Polyhedron(tuple(vars_), tuple(c)) for c in to_dnf(parse_pap(text, vars_), mode)]


def poly(vars_, *rows):
    """``poly(("x","y"), ({"x": 1}, 0, ">="), ...)`` builds ``x >= 0`` and friends."""
    cs = []
    for coeffs, const, rel in rows:
        e = LinearExpr({k: Fraction(v) for k, v in coeffs.items()}, Fraction(const))
        cs.append(Constraint(e, EQ if rel == "==" else GEQ))
    return Polyhedron(tuple(vars_), tuple(cs))


VARS3 = ("x", "y", "z")


@st.composite
def polyhedra(draw, nvars=3, max_rows=5, coeff=3, eq_ratio=0.2):
    """Random small systems; rows are ``sum a_i v_i + b >= 0`` or ``= 0``."""
    vs = VARS3[:nvars]
    n = draw(st.integers(0, max_rows))
    cs = []
    for _ in range(n):
        coeffs = [draw(st.integers(-coeff, coeff)) for _ in vs]
        const = draw(st.integers(-2 * coeff, 2 * coeff))
        rel = EQ if draw(st.floats(0, 1)) < eq_ratio else GEQ
        cs.append(Constraint(LinearExpr({v: Fraction(a) for v, a in zip(vs, coeffs) if a}, Fraction(const)), rel))
    return Polyhedron(vs, tuple(cs))
