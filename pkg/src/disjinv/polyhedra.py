"""Exact convex polyhedra over named variables.

A polyhedron is kept in constraint form (``Polyhedron``) and converted on
demand to generator form (``GeneratorSet``) with an incremental Chernikova
double-description engine.  All conversions work on integer vectors; a
polyhedron over ``n`` variables is homogenized into a cone in ``n + 1``
dimensions whose first coordinate is the homogenizing one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .ratlin import IntegerEchelon, _rref, integer_rank


# ---------------------------------------------------------------------------
# affine expressions and constraints
# ---------------------------------------------------------------------------

class Relation(enum.Enum):
    GEQ = ">="
    EQ = "="


GEQ = Relation.GEQ
EQ = Relation.EQ


class LinearExpr:
    """``sum(coeffs[v] * v) + constant`` with exact rational coefficients."""

    __slots__ = ("coeffs", "constant", "_hash")

    def __init__(self, coeffs: Optional[Mapping[str, object]] = None, constant=0):
        c = {}
        if coeffs:
            for v, a in coeffs.items():
                a = Fraction(a)
                if a != 0:
                    c[v] = a
        self.coeffs: Dict[str, Fraction] = c
        self.constant = Fraction(constant)
        self._hash = None

    @classmethod
    def var(cls, name: str, coeff=1) -> "LinearExpr":
        return cls({name: coeff})

    @classmethod
    def const(cls, value) -> "LinearExpr":
        return cls(None, value)

    def __eq__(self, other):
        return (isinstance(other, LinearExpr) and self.constant == other.constant
                and self.coeffs == other.coeffs)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.coeffs.items()), self.constant))
        return self._hash

    def __repr__(self):
        return f"LinearExpr({format_expr(self)})"

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        if not isinstance(other, LinearExpr):
            other = LinearExpr.const(other)
        c = dict(self.coeffs)
        for v, a in other.coeffs.items():
            c[v] = c.get(v, 0) + a
        return LinearExpr(c, self.constant + other.constant)

    def __neg__(self) -> "LinearExpr":
        return LinearExpr({v: -a for v, a in self.coeffs.items()}, -self.constant)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        if not isinstance(other, LinearExpr):
            other = LinearExpr.const(other)
        return self + (-other)

    def __radd__(self, other) -> "LinearExpr":
        return self + other

    def __rsub__(self, other) -> "LinearExpr":
        return (-self) + other

    def __mul__(self, k) -> "LinearExpr":
        return self.scale(k)

    __rmul__ = __mul__

    def scale(self, k) -> "LinearExpr":
        k = Fraction(k)
        return LinearExpr({v: a * k for v, a in self.coeffs.items()}, self.constant * k)

    def is_constant(self) -> bool:
        return not self.coeffs

    @property
    def variables(self) -> frozenset:
        return frozenset(self.coeffs)

    def coeff(self, v: str) -> Fraction:
        return self.coeffs.get(v, Fraction(0))

    def substitute(self, mapping: Mapping[str, "LinearExpr"]) -> "LinearExpr":
        out = LinearExpr.const(self.constant)
        rest = {}
        for v, a in self.coeffs.items():
            if v in mapping:
                out = out + mapping[v].scale(a)
            else:
                rest[v] = a
        return out + LinearExpr(rest)

    def rename(self, mapping: Mapping[str, str]) -> "LinearExpr":
        c = {}
        for v, a in self.coeffs.items():
            w = mapping.get(v, v)
            c[w] = c.get(w, 0) + a
        return LinearExpr(c, self.constant)

    def evaluate(self, point: Mapping[str, object]) -> Fraction:
        total = self.constant
        for v, a in self.coeffs.items():
            total += a * point[v]
        return total


@dataclass(frozen=True)
class Constraint:
    """``expr >= 0`` or ``expr = 0``."""

    expr: LinearExpr
    relation: Relation = GEQ

    @property
    def is_eq(self) -> bool:
        return self.relation is EQ

    @property
    def variables(self) -> frozenset:
        return self.expr.variables

    def normalized(self) -> "Constraint":
        """Scale to integer coefficients with content 1; equalities get a positive leading coefficient."""
        e = self.expr
        vals = list(e.coeffs.values()) + [e.constant]
        den = 1
        for q in vals:
            den = den * q.denominator // math.gcd(den, q.denominator)
        ints = [int(q * den) for q in vals]
        g = 0
        for i in ints:
            g = math.gcd(g, i)
        if g == 0:
            return Constraint(LinearExpr(), self.relation)
        k = Fraction(den, g)
        if self.is_eq:
            lead = next((e.coeffs[v] for v in sorted(e.coeffs)), e.constant)
            if lead < 0:
                k = -k
        return Constraint(e.scale(k), self.relation)

    def is_trivial(self) -> bool:
        """True for constant constraints that always hold."""
        if not self.expr.is_constant():
            return False
        c = self.expr.constant
        return c == 0 if self.is_eq else c >= 0

    def is_contradiction(self) -> bool:
        if not self.expr.is_constant():
            return False
        c = self.expr.constant
        return c != 0 if self.is_eq else c < 0

    def holds_at(self, point: Mapping[str, object]) -> bool:
        v = self.expr.evaluate(point)
        return v == 0 if self.is_eq else v >= 0

    def substitute(self, mapping: Mapping[str, LinearExpr]) -> "Constraint":
        return Constraint(self.expr.substitute(mapping), self.relation)

    def rename(self, mapping: Mapping[str, str]) -> "Constraint":
        return Constraint(self.expr.rename(mapping), self.relation)

    def as_inequalities(self) -> List["Constraint"]:
        if self.is_eq:
            return [Constraint(self.expr, GEQ), Constraint(-self.expr, GEQ)]
        return [self]

    def __repr__(self):
        return f"Constraint({format_constraint(self)})"


def geq(lhs: LinearExpr, rhs: LinearExpr) -> Constraint:
    return Constraint(lhs - rhs, GEQ)


def eq(lhs: LinearExpr, rhs: LinearExpr) -> Constraint:
    return Constraint(lhs - rhs, EQ)


FALSE_CONSTRAINT = Constraint(LinearExpr.const(-1), GEQ)


def integer_row(c: Constraint, vars_: Sequence[str]) -> Tuple[int, ...]:
    """Homogenized integer row ``(constant, coeffs...)`` of a constraint, content 1."""
    e = c.expr
    vals = [e.constant] + [e.coeff(v) for v in vars_]
    den = 1
    for q in vals:
        den = den * q.denominator // math.gcd(den, q.denominator)
    ints = [int(q * den) for q in vals]
    return _reduce(ints)


def _reduce(v: Sequence[int]) -> Tuple[int, ...]:
    g = 0
    for x in v:
        g = math.gcd(g, x)
    if g > 1:
        return tuple(x // g for x in v)
    return tuple(v)


def _orient_line(v: Tuple[int, ...]) -> Tuple[int, ...]:
    for x in v:
        if x != 0:
            return v if x > 0 else tuple(-y for y in v)
    return v


def constraint_from_row(row: Sequence[int], vars_: Sequence[str], rel: Relation) -> Constraint:
    return Constraint(LinearExpr(dict(zip(vars_, row[1:])), row[0]), rel).normalized()


# ---------------------------------------------------------------------------
# Chernikova double description on integer cones
# ---------------------------------------------------------------------------

def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


class Cone:
    """Incremental double description of ``{x : rows}`` in ``dim`` dimensions.

    Starts from the whole space (one line per axis) and adds rows one at a
    time.  ``rays`` keeps a bitmask of saturated inequalities per ray for the
    combinatorial adjacency test.
    """

    __slots__ = ("dim", "lines", "rays", "sats", "n_ineq", "n_eq")

    def __init__(self, dim: int):
        self.dim = dim
        self.lines: List[Tuple[int, ...]] = [
            tuple(1 if i == j else 0 for j in range(dim)) for i in range(dim)]
        self.rays: List[Tuple[int, ...]] = []
        self.sats: List[int] = []
        self.n_ineq = 0
        self.n_eq = 0

    def copy(self) -> "Cone":
        c = Cone.__new__(Cone)
        c.dim = self.dim
        c.lines = list(self.lines)
        c.rays = list(self.rays)
        c.sats = list(self.sats)
        c.n_ineq = self.n_ineq
        c.n_eq = self.n_eq
        return c

    def add(self, row: Sequence[int], is_eq: bool = False) -> None:
        if is_eq:
            self.n_eq += 1
            bit = 0
        else:
            bit = 1 << self.n_ineq
            self.n_ineq += 1

        # a line not orthogonal to the row absorbs the constraint
        for idx, l in enumerate(self.lines):
            s = _dot(row, l)
            if s != 0:
                if s < 0:
                    l = tuple(-x for x in l)
                    s = -s
                new_lines = []
                for j, l2 in enumerate(self.lines):
                    if j == idx:
                        continue
                    t = _dot(row, l2)
                    if t:
                        l2 = _orient_line(_reduce([s * a - t * b for a, b in zip(l2, l)]))
                    new_lines.append(l2)
                new_rays = []
                for r in self.rays:
                    t = _dot(row, r)
                    if t:
                        r = _reduce([s * a - t * b for a, b in zip(r, l)])
                    new_rays.append(r)
                all_prev = bit - 1 if bit else (1 << self.n_ineq) - 1
                new_sats = [m | bit for m in self.sats]
                if not is_eq:
                    new_rays.append(l)
                    new_sats.append(all_prev)
                self.lines = new_lines
                self.rays = new_rays
                self.sats = new_sats
                return

        vals = [_dot(row, r) for r in self.rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        if not neg and (not is_eq or not pos):
            for i in zero:
                self.sats[i] |= bit
            return

        rays = self.rays
        sats = self.sats
        need = self.dim - len(self.lines) - 2 - self.n_eq
        new_rays = []
        new_sats = []
        keep = zero if is_eq else zero + pos
        keep.sort()
        for i in keep:
            new_rays.append(rays[i])
            new_sats.append(sats[i] | (bit if vals[i] == 0 else 0))
        nr = len(rays)
        for p in pos:
            sp = sats[p]
            vp = vals[p]
            rp = rays[p]
            for q in neg:
                common = sp & sats[q]
                if need > 0 and bin(common).count("1") < need:
                    continue
                adjacent = True
                for k in range(nr):
                    if k != p and k != q and (sats[k] & common) == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vq = vals[q]
                rq = rays[q]
                new_rays.append(_reduce([vp * b - vq * a for a, b in zip(rp, rq)]))
                new_sats.append(common | bit)
        self.rays = new_rays
        self.sats = new_sats


def _hull_rows(p: "Polyhedron") -> List[Tuple[Tuple[int, ...], bool]]:
    vs = p.vars
    rows = []
    for c in p.constraints:
        rows.append((integer_row(c, vs), c.is_eq))
    # equalities first keeps intermediate cones small
    rows.sort(key=lambda rc: not rc[1])
    return rows


def _positivity(dim: int) -> Tuple[int, ...]:
    return tuple(1 if i == 0 else 0 for i in range(dim))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

class GenKind(enum.Enum):
    POINT = "point"
    RAY = "ray"
    LINE = "line"


POINT = GenKind.POINT
RAY = GenKind.RAY
LINE = GenKind.LINE


@dataclass(frozen=True)
class Generator:
    kind: GenKind
    coords: Tuple[Fraction, ...]

    def homogeneous(self) -> Tuple[int, ...]:
        """Integer homogenized vector ``(xi, coords...)``."""
        if self.kind is POINT:
            den = 1
            for q in self.coords:
                den = den * q.denominator // math.gcd(den, q.denominator)
            return _reduce([den] + [int(q * den) for q in self.coords])
        return (0,) + tuple(int(q) for q in self.coords)


@dataclass(frozen=True)
class GeneratorSet:
    vars: Tuple[str, ...]
    gens: Tuple[Generator, ...]

    @property
    def points(self) -> List[Generator]:
        return [g for g in self.gens if g.kind is POINT]

    @property
    def rays(self) -> List[Generator]:
        return [g for g in self.gens if g.kind is RAY]

    @property
    def lines(self) -> List[Generator]:
        return [g for g in self.gens if g.kind is LINE]

    def is_empty(self) -> bool:
        return not self.gens


def _gens_from_cone(cone: Cone, vars_: Tuple[str, ...]) -> GeneratorSet:
    if not any(r[0] > 0 for r in cone.rays):
        return GeneratorSet(vars_, ())
    gens = []
    for r in cone.rays:
        if r[0] > 0:
            gens.append(Generator(POINT, tuple(Fraction(x, r[0]) for x in r[1:])))
        else:
            gens.append(Generator(RAY, tuple(Fraction(x) for x in r[1:])))
    for l in cone.lines:
        gens.append(Generator(LINE, tuple(Fraction(x) for x in l[1:])))
    return GeneratorSet(vars_, tuple(gens))


# ---------------------------------------------------------------------------
# polyhedra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polyhedron:
    vars: Tuple[str, ...]
    constraints: Tuple[Constraint, ...] = ()
    _cone: Optional[Cone] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        allowed = set(self.vars)
        for c in self.constraints:
            if not c.variables <= allowed:
                raise ValueError(f"constraint {format_constraint(c)} mentions variables outside {self.vars}")

    @classmethod
    def universe(cls, vars_: Sequence[str]) -> "Polyhedron":
        return cls(tuple(vars_), ())

    @classmethod
    def empty(cls, vars_: Sequence[str]) -> "Polyhedron":
        return cls(tuple(vars_), (FALSE_CONSTRAINT,))

    def cone(self) -> Cone:
        """Double-description cone of the homogenized polyhedron (cached)."""
        if self._cone is None:
            dim = len(self.vars) + 1
            c = Cone(dim)
            c.add(_positivity(dim))
            for row, is_eq in _hull_rows(self):
                c.add(row, is_eq)
            object.__setattr__(self, "_cone", c)
        return self._cone

    def add_constraints(self, extra: Iterable[Constraint]) -> "Polyhedron":
        extra = tuple(extra)
        out = Polyhedron(self.vars, self.constraints + extra)
        if self._cone is not None:
            c = self._cone.copy()
            for x in sorted(extra, key=lambda k: not k.is_eq):
                c.add(integer_row(x, self.vars), x.is_eq)
            object.__setattr__(out, "_cone", c)
        return out

    def with_vars(self, vars_: Sequence[str]) -> "Polyhedron":
        """The same constraints over a (super)set of variables."""
        return Polyhedron(tuple(vars_), self.constraints)

    def rename(self, mapping: Mapping[str, str]) -> "Polyhedron":
        return Polyhedron(tuple(mapping.get(v, v) for v in self.vars),
                          tuple(c.rename(mapping) for c in self.constraints))

    def contains_point(self, point: Mapping[str, object]) -> bool:
        return all(c.holds_at(point) for c in self.constraints)

    def __and__(self, other: "Polyhedron") -> "Polyhedron":
        vs = list(self.vars) + [v for v in other.vars if v not in self.vars]
        return Polyhedron(tuple(vs), self.constraints + other.constraints)

    def __repr__(self):
        return f"Polyhedron({format_conjunction(self.constraints)})"


def constraints_to_generators(p: Polyhedron) -> GeneratorSet:
    return _gens_from_cone(p.cone(), p.vars)


def generators_to_constraints(g: GeneratorSet) -> Polyhedron:
    """Minimal constraint system of the polyhedron generated by ``g``."""
    vs = tuple(g.vars)
    if g.is_empty():
        return Polyhedron.empty(vs)
    if not g.points:
        raise ValueError("a nonempty generator set needs at least one point")
    dim = len(vs) + 1
    dual = Cone(dim)
    hom = [(x.homogeneous(), x.kind is LINE) for x in g.gens]
    hom.sort(key=lambda t: not t[1])
    for v, is_line in hom:
        dual.add(v, is_line)
    cons = []
    for l in dual.lines:
        cons.append(constraint_from_row(l, vs, EQ))
    for r in dual.rays:
        if any(r[1:]):
            cons.append(constraint_from_row(r, vs, GEQ))
    return Polyhedron(vs, tuple(_sorted_constraints(cons, vs)))


def is_empty(p: Polyhedron) -> bool:
    for c in p.constraints:
        if c.is_contradiction():
            return True
    return not any(r[0] > 0 for r in p.cone().rays)


def _gen_satisfies(g: Generator, c: Constraint, vars_: Sequence[str]) -> bool:
    e = c.expr
    v = sum((e.coeff(x) * q for x, q in zip(vars_, g.coords)), Fraction(0))
    if g.kind is POINT:
        v += e.constant
        return v == 0 if c.is_eq else v >= 0
    if g.kind is LINE:
        return v == 0
    return v == 0 if c.is_eq else v >= 0


def includes(p: Polyhedron, q: Polyhedron) -> bool:
    """True iff every point of ``q`` lies in ``p``."""
    if tuple(p.vars) != tuple(q.vars):
        vs = list(q.vars) + [v for v in p.vars if v not in q.vars]
        q = q.with_vars(vs)
        p = p.with_vars(vs)
    g = constraints_to_generators(q)
    vs = q.vars
    for c in p.constraints:
        for x in g.gens:
            if not _gen_satisfies(x, c, vs):
                return False
    return True


def equivalent(p: Polyhedron, q: Polyhedron) -> bool:
    return includes(p, q) and includes(q, p)


def minkowski_split(p: Polyhedron) -> Tuple[GeneratorSet, GeneratorSet]:
    """Split into the polytope part (points) and the cone part (rays and lines)."""
    g = constraints_to_generators(p)
    if g.is_empty():
        raise ValueError("minkowski_split of an empty polyhedron")
    return (GeneratorSet(g.vars, tuple(g.points)),
            GeneratorSet(g.vars, tuple(x for x in g.gens if x.kind is not POINT)))


def _independent_rows(rows: List[Tuple[int, ...]]) -> List[int]:
    ech = IntegerEchelon()
    return [i for i, r in enumerate(rows) if ech.add(r)]


def remove_redundant(p: Polyhedron) -> Polyhedron:
    """Minimal equivalent system: implicit equalities become EQ, redundant rows are dropped.

    Uses one conversion: a row is kept iff its saturated generators span a
    facet of the homogenized cone and no earlier row already defines it.
    """
    vs = p.vars
    cons = [c.normalized() for c in p.constraints]
    if any(c.is_contradiction() for c in cons):
        return Polyhedron.empty(vs)
    cons = [c for c in cons if not c.is_trivial()]
    cone = p.cone()
    if not any(r[0] > 0 for r in cone.rays):
        return Polyhedron.empty(vs)
    rays = cone.rays
    lines = cone.lines
    rows = [integer_row(c, vs) for c in cons]
    eq_rows = []
    geq_idx = []
    for i, (c, r) in enumerate(zip(cons, rows)):
        if c.is_eq or all(_dot(r, g) == 0 for g in rays):
            eq_rows.append(i)
        else:
            geq_idx.append(i)
    keep_eq = [eq_rows[k] for k in _independent_rows([rows[i] for i in eq_rows])]
    gens_all = rays + lines
    full_rank = integer_rank(gens_all)
    seen_faces = set()
    # the homogenizing row xi >= 0 is implicit and always comes first
    pos_face = frozenset(k for k, g in enumerate(rays) if g[0] == 0)
    seen_faces.add(pos_face)
    keep_geq = []
    for i in geq_idx:
        r = rows[i]
        face = frozenset(k for k, g in enumerate(rays) if _dot(r, g) == 0)
        if face in seen_faces:
            continue
        if integer_rank([rays[k] for k in face] + lines) == full_rank - 1:
            seen_faces.add(face)
            keep_geq.append(i)
    eqs = [cons[i].expr for i in keep_eq]
    out = _reduce_equalities(eqs, [cons[i].expr for i in keep_geq], vs)
    res = Polyhedron(vs, tuple(_sorted_constraints(out, vs)))
    object.__setattr__(res, "_cone", cone)
    return res


def _reduce_equalities(eqs: List[LinearExpr], ineqs: List[LinearExpr], vs: Sequence[str]) -> List[Constraint]:
    """Equalities in reduced echelon form (pivots taken from the last variable backwards),
    with pivot variables eliminated from the inequalities."""
    if not eqs:
        return [Constraint(e, GEQ).normalized() for e in ineqs]
    rows = [[e.coeff(v) for v in reversed(vs)] + [e.constant] for e in eqs]
    ech = _rref(rows, len(vs))
    out = []
    subst: Dict[str, LinearExpr] = {}
    for i, pc in enumerate(ech.pivots):
        r = ech.reduced[i]
        v = vs[len(vs) - 1 - pc]
        e = LinearExpr({w: r[len(vs) - 1 - j] for j, w in enumerate(vs)}, r[-1])
        out.append(Constraint(e, EQ).normalized())
        subst[v] = LinearExpr.var(v) - e
    for e in ineqs:
        out.append(Constraint(e.substitute(subst), GEQ).normalized())
    return out


def remove_redundant_drop_and_test(p: Polyhedron) -> Polyhedron:
    """Reference minimization: drop each row in turn and keep it only if it is not implied."""
    vs = p.vars
    if is_empty(p):
        return Polyhedron.empty(vs)
    g = constraints_to_generators(p)
    cons = []
    for c in p.constraints:
        c = c.normalized()
        if c.is_trivial():
            continue
        if not c.is_eq and all(_gen_satisfies(x, Constraint(c.expr, EQ), vs) for x in g.gens):
            c = Constraint(c.expr, EQ).normalized()
        cons.append(c)
    i = 0
    while i < len(cons):
        rest = Polyhedron(vs, tuple(cons[:i] + cons[i + 1:]))
        if includes(Polyhedron(vs, (cons[i],)), rest):
            cons.pop(i)
        else:
            i += 1
    return Polyhedron(vs, tuple(_sorted_constraints(cons, vs)))


def _fm_pick(cons: List[Constraint], elim: List[str]) -> str:
    best = None
    for v in elim:
        pos = sum(1 for c in cons if c.expr.coeff(v) > 0)
        neg = sum(1 for c in cons if c.expr.coeff(v) < 0)
        cost = pos * neg - pos - neg
        if best is None or cost < best[0]:
            best = (cost, v)
    return best[1]


def project(p: Polyhedron, keep: Sequence[str]) -> Polyhedron:
    """Shadow of ``p`` on ``keep`` by Fourier-Motzkin elimination.

    Equalities are used for substitution first; redundancy is removed after
    every eliminated variable.
    """
    keep = [v for v in p.vars if v in set(keep)] if not isinstance(keep, tuple) else list(keep)
    missing = [v for v in keep if v not in p.vars]
    if missing:
        raise ValueError(f"keep variables {missing} not in polyhedron")
    cur = remove_redundant(p)
    if is_empty(cur):
        return Polyhedron.empty(tuple(keep))
    cons = list(cur.constraints)
    vars_now = list(cur.vars)
    elim = [v for v in vars_now if v not in keep]
    while elim:
        mentioned = [v for v in elim if any(c.expr.coeff(v) != 0 for c in cons)]
        for v in elim:
            if v not in mentioned:
                vars_now.remove(v)
        elim = mentioned
        if not elim:
            break
        eqc = next(((c, v) for c in cons if c.is_eq for v in elim if c.expr.coeff(v) != 0), None)
        if eqc is not None:
            c, v = eqc
            a = c.expr.coeff(v)
            sol = (c.expr - LinearExpr.var(v, a)).scale(Fraction(-1) / a)
            cons = [d.substitute({v: sol}).normalized() for d in cons if d is not c]
        else:
            v = _fm_pick(cons, elim)
            pos = [c for c in cons if c.expr.coeff(v) > 0]
            neg = [c for c in cons if c.expr.coeff(v) < 0]
            rest = [c for c in cons if c.expr.coeff(v) == 0]
            for cp in pos:
                ap = cp.expr.coeff(v)
                for cn in neg:
                    an = -cn.expr.coeff(v)
                    rest.append(Constraint(cp.expr.scale(an) + cn.expr.scale(ap), GEQ).normalized())
            cons = rest
        vars_now.remove(v)
        elim.remove(v)
        cons = [c for c in cons if not c.is_trivial()]
        if any(c.is_contradiction() for c in cons):
            return Polyhedron.empty(tuple(keep))
        cur = remove_redundant(Polyhedron(tuple(vars_now), tuple(cons)))
        if is_empty(cur):
            return Polyhedron.empty(tuple(keep))
        cons = list(cur.constraints)
    return remove_redundant(Polyhedron(tuple(keep), tuple(cons)))


def project_by_generators(p: Polyhedron, keep: Sequence[str]) -> Polyhedron:
    """Projection through the generator representation (drop coordinates, reconvert)."""
    keep = tuple(keep)
    g = constraints_to_generators(p)
    if g.is_empty():
        return Polyhedron.empty(keep)
    idx = [p.vars.index(v) for v in keep]
    gens = []
    for x in g.gens:
        coords = tuple(x.coords[i] for i in idx)
        if x.kind is not POINT and not any(coords):
            continue
        if x.kind is not POINT:
            coords = tuple(Fraction(c) for c in _reduce([int(c) for c in coords]))
        gens.append(Generator(x.kind, coords))
    return generators_to_constraints(GeneratorSet(keep, tuple(gens)))


# ---------------------------------------------------------------------------
# disjunctions of polyhedra
# ---------------------------------------------------------------------------

def simplify_dnf(dnf: Sequence[Polyhedron]) -> List[Polyhedron]:
    """Minimize each disjunct, drop empty ones and ones included in another disjunct."""
    parts = []
    for d in dnf:
        r = remove_redundant(d)
        if not is_empty(r):
            parts.append(r)
    out: List[Polyhedron] = []
    for i, d in enumerate(parts):
        dominated = False
        for j, e in enumerate(parts):
            if i == j:
                continue
            if includes(e, d) and (not includes(d, e) or j < i):
                dominated = True
                break
        if not dominated:
            out.append(d)
    return out


def _negate_integer(c: Constraint) -> List[Constraint]:
    """Integer complement of a constraint, as a list of alternatives."""
    c = c.normalized()
    if c.is_eq:
        return [Constraint(c.expr - 1, GEQ), Constraint(-c.expr - 1, GEQ)]
    return [Constraint(-c.expr - 1, GEQ)]


_SLACK = "__slack"


def _strict_empty(p: Polyhedron, strict: Sequence[LinearExpr]) -> bool:
    """Emptiness of ``p`` intersected with ``e > 0`` for each ``e`` in ``strict``."""
    if not strict:
        return is_empty(p)
    if is_empty(p):
        return True
    vs = p.vars + (_SLACK,)
    s = LinearExpr.var(_SLACK)
    cons = list(p.constraints) + [Constraint(e - s, GEQ) for e in strict]
    cons += [Constraint(s, GEQ), Constraint(1 - s, GEQ)]
    g = constraints_to_generators(Polyhedron(vs, tuple(cons)))
    return not any(x.coords[-1] > 0 for x in g.points)


def dnf_difference_empty(piece: Polyhedron, union: Sequence[Polyhedron], integer: bool = False,
                         budget: int = 20000) -> Optional[bool]:
    """Decide whether ``piece`` is covered by ``union`` by splitting on complemented constraints.

    Rational mode is exact: complements are strict and checked with a
    bounded slack dimension.  Integer mode tightens complements and decides
    integer coverage exactly for integer-coefficient constraints, except
    that a rationally nonempty piece without integer points counts as
    uncovered.  Returns None when the split budget runs out.
    """
    vs = piece.vars
    union = [q.with_vars(vs) if q.vars != vs else q for q in union]
    stack: List[Tuple[Polyhedron, Tuple[LinearExpr, ...], int]] = [(piece, (), 0)]
    steps = 0
    while stack:
        cur, strict, k = stack.pop()
        steps += 1
        if steps > budget:
            return None
        if _strict_empty(cur, strict):
            continue
        if k == len(union):
            return False
        q = union[k]
        if includes(q, cur):
            continue
        prefix: List[Constraint] = []
        for c in q.constraints:
            if integer:
                for alt in _negate_integer(c):
                    stack.append((cur.add_constraints(prefix + [alt]), strict, k + 1))
            elif c.is_eq:
                stack.append((cur.add_constraints(prefix), strict + (c.expr,), k + 1))
                stack.append((cur.add_constraints(prefix), strict + (-c.expr,), k + 1))
            else:
                stack.append((cur.add_constraints(prefix), strict + (-c.expr,), k + 1))
            prefix.append(c)
    return True


def dnf_includes(outer: Sequence[Polyhedron], inner: Sequence[Polyhedron], integer: bool = False) -> Optional[bool]:
    """True iff the union ``inner`` is contained in the union ``outer``."""
    for d in inner:
        if any(includes(o, d) for o in outer):
            continue
        r = dnf_difference_empty(d, list(outer), integer)
        if r is not True:
            return r
    return True


def dnf_equivalent(a: Sequence[Polyhedron], b: Sequence[Polyhedron], integer: bool = False) -> Optional[bool]:
    x = dnf_includes(a, b, integer)
    if x is not True:
        return x
    return dnf_includes(b, a, integer)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def _fmt_num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_expr(e: LinearExpr, order: Optional[Sequence[str]] = None) -> str:
    names = list(order) if order else sorted(e.coeffs)
    names += [v for v in sorted(e.coeffs) if v not in names]
    out = ""
    for v in names:
        a = e.coeffs.get(v)
        if not a:
            continue
        mag = abs(a)
        term = v if mag == 1 else f"{_fmt_num(mag)}{v}"
        if not out:
            out = term if a > 0 else "-" + term
        else:
            out += ("+" if a > 0 else "-") + term
    if e.constant or not out:
        c = e.constant
        if not out:
            out = _fmt_num(c)
        else:
            out += ("+" if c > 0 else "-") + _fmt_num(abs(c))
    return out


def _sides(e: LinearExpr, order) -> Tuple[LinearExpr, LinearExpr]:
    left = LinearExpr({v: a for v, a in e.coeffs.items() if a > 0}, max(e.constant, 0))
    right = LinearExpr({v: -a for v, a in e.coeffs.items() if a < 0}, max(-e.constant, 0))
    return left, right


SYMBOLS = {
    "unicode": {"ge": "≥", "le": "≤", "and": " ∧ ", "or": " ∨ ", "true": "true", "false": "false"},
    "ascii": {"ge": ">=", "le": "<=", "and": " /\\ ", "or": " \\/ ", "true": "true", "false": "false"},
}


def format_constraint(c: Constraint, order: Optional[Sequence[str]] = None, style: str = "unicode") -> str:
    sym = SYMBOLS[style]
    c = c.normalized() if not c.expr.is_constant() else c
    left, right = _sides(c.expr, order)
    if len(c.expr.coeffs) == 1 and abs(next(iter(c.expr.coeffs.values()))) == 1:
        (v, a), = c.expr.coeffs.items()
        bound = _fmt_num(-c.expr.constant / a)
        if c.is_eq:
            return f"{v}={bound}"
        return f"{v}{sym['ge'] if a > 0 else sym['le']}{bound}"
    if c.is_eq:
        # a primed variable with unit coefficient reads best alone on the left
        pv = next((v for v in (order or sorted(c.expr.coeffs)) if v.endswith("'")
                   and abs(c.expr.coeff(v)) == 1), None)
        if pv is not None:
            e = c.expr.scale(c.expr.coeff(pv))
            rest = LinearExpr.var(pv) - e
            return f"{pv}={format_expr(rest, order)}"
        if left.is_constant() and not right.is_constant():
            left, right = right, left
        return f"{format_expr(left, order)}={format_expr(right, order)}"
    if left.is_constant() and not right.is_constant():
        return f"{format_expr(right, order)}{sym['le']}{format_expr(left, order)}"
    return f"{format_expr(left, order)}{sym['ge']}{format_expr(right, order)}"


def _sorted_constraints(cons: Iterable[Constraint], order: Sequence[str]) -> List[Constraint]:
    pos = {v: i for i, v in enumerate(order)}

    def key(c: Constraint):
        vs = sorted(pos.get(v, len(pos)) for v in c.expr.coeffs)
        return (0 if c.is_eq else 1, len(vs), vs, format_constraint(c, order))

    uniq = {}
    for c in cons:
        uniq.setdefault(c, c)
    return sorted(uniq, key=key)


def format_conjunction(cons: Sequence[Constraint], order: Optional[Sequence[str]] = None,
                       style: str = "unicode") -> str:
    """Conjunction with paired bounds merged into ``lo≤e≤hi``."""
    sym = SYMBOLS[style]
    cons = [c.normalized() for c in cons]
    if not cons:
        return sym["true"]
    if any(c.is_contradiction() for c in cons):
        return sym["false"]
    order = list(order) if order else sorted({v for c in cons for v in c.variables})
    # group inequalities by their variable part with a positive leading coefficient
    groups: Dict[Tuple, Dict[str, Fraction]] = {}
    lead_order = []
    parts = []
    for c in cons:
        if c.is_eq or c.expr.is_constant():
            parts.append(format_constraint(c, order, style))
            continue
        first = next(v for v in order if c.expr.coeff(v) != 0)
        sign = 1 if c.expr.coeff(first) > 0 else -1
        body = LinearExpr(c.expr.coeffs).scale(sign)
        key = tuple(sorted(body.coeffs.items()))
        g = groups.setdefault(key, {})
        if key not in lead_order:
            lead_order.append(key)
        bound = -c.expr.constant * sign
        if sign > 0:
            g["lo"] = bound if "lo" not in g else max(g["lo"], bound)
        else:
            g["hi"] = bound if "hi" not in g else min(g["hi"], bound)
        g.setdefault("src", [])
        g["src"].append(c)
    for key in lead_order:
        g = groups[key]
        body = LinearExpr(dict(key))
        if "lo" in g and "hi" in g:
            parts.append(f"{_fmt_num(g['lo'])}{sym['le']}{format_expr(body, order)}{sym['le']}{_fmt_num(g['hi'])}")
        else:
            for c in g["src"]:
                parts.append(format_constraint(c, order, style))
    return sym["and"].join(parts)


def format_dnf(dnf: Sequence[Polyhedron], order: Optional[Sequence[str]] = None, style: str = "unicode") -> str:
    sym = SYMBOLS[style]
    if not dnf:
        return sym["false"]
    texts = [format_conjunction(d.constraints, order or d.vars, style) for d in dnf]
    if len(texts) == 1:
        return texts[0]
    return sym["or"].join(f"({t})" for t in texts)
