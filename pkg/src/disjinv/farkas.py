"""Inductive affine assertion maps by Farkas' Lemma.

Each location gets a template ``c.x + d >= 0``.  Initialization and
consecution conditions become polyhedra over the template unknowns once the
Farkas multipliers are projected away.  The per-transition alternatives
(multiplier of the source template fixed to each value in ``mu``, plus the
unsatisfiability row) form a CNF over coefficient spaces; every conjunction
of its DNF is converted to generators, and every generator is read back as a
concrete inequality.
"""

from __future__ import annotations

import itertools
import time
from math import gcd
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .loop_ir import INT
from .ats import Ats, Location, Transition, digraph, prime, prime_map, unprime_map
from .polyhedra import (EQ, GEQ, LINE, Constraint, LinearExpr, Polyhedron,
                        constraints_to_generators, dnf_difference_empty, includes, is_empty,
                        project, project_by_generators, remove_redundant, simplify_dnf)

DNF_CAP = 10000

AssertionMap = Dict[Location, List[Polyhedron]]


class DnfExplosionError(RuntimeError):
    pass


@dataclass
class SolverOptions:
    mu: Tuple[Fraction, ...] = (Fraction(0), Fraction(1))
    unsat_row: bool = True
    dnf_cap: int = DNF_CAP
    # "project" eliminates multipliers by Fourier-Motzkin, "generators" via the generator form
    elimination: str = "project"
    timeout: Optional[float] = None


@dataclass
class SolverStats:
    clauses: int = 0
    leaves: int = 0
    seconds: float = 0.0


class AnalysisTimeout(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# templates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Template:
    """Unknown names of the template row at one location."""

    loc: Location
    coeffs: Tuple[str, ...]
    const: str

    @classmethod
    def of(cls, loc: Location, vars_: Sequence[str]) -> "Template":
        return cls(loc, tuple(f"c[{loc.id}][{v}]" for v in vars_), f"d[{loc.id}]")

    @property
    def unknowns(self) -> Tuple[str, ...]:
        return self.coeffs + (self.const,)

    def coeff_exprs(self, vars_: Sequence[str]) -> Dict[str, LinearExpr]:
        return {v: LinearExpr.var(c) for v, c in zip(vars_, self.coeffs)}

    def const_expr(self) -> LinearExpr:
        return LinearExpr.var(self.const)


def _farkas_space(rows: Sequence[Constraint], vars_: Sequence[str],
                  premise: Optional[Tuple[Mapping[str, LinearExpr], LinearExpr]],
                  target: Mapping[str, LinearExpr], target_const: LinearExpr,
                  keep: Sequence[str], elimination: str = "project") -> Polyhedron:
    """Unknowns for which ``premise + sum(lam_i * row_i) + lam0`` equals the target row.

    ``rows`` are over ``vars_``; GEQ rows get nonnegative multipliers, EQ rows
    free ones.  ``premise`` and ``target`` give per-variable coefficient
    expressions over ``keep``.
    """
    lam = [f"lam{i}" for i in range(len(rows))]
    lam0 = "lam_c"
    cons: List[Constraint] = []
    for i, r in enumerate(rows):
        if not r.is_eq:
            cons.append(Constraint(LinearExpr.var(lam[i]), GEQ))
    cons.append(Constraint(LinearExpr.var(lam0), GEQ))
    zero = LinearExpr()
    for v in vars_:
        e = LinearExpr({lam[i]: r.expr.coeff(v) for i, r in enumerate(rows)})
        if premise is not None:
            e = e + premise[0].get(v, zero)
        e = e - target.get(v, zero)
        cons.append(Constraint(e, EQ))
    e = LinearExpr({lam[i]: r.expr.constant for i, r in enumerate(rows)}) + LinearExpr.var(lam0)
    if premise is not None:
        e = e + premise[1]
    cons.append(Constraint(e - target_const, EQ))
    full = Polyhedron(tuple(keep) + tuple(lam) + (lam0,), tuple(cons))
    if elimination == "generators":
        return project_by_generators(full, tuple(keep))
    return project(full, tuple(keep))


def init_tabular(theta_clause: Polyhedron, tpl: Template, elimination: str = "project") -> Polyhedron:
    """Coefficients of inequalities implied by ``theta_clause``."""
    X = theta_clause.vars
    return _farkas_space(theta_clause.constraints, X, None, tpl.coeff_exprs(X), tpl.const_expr(),
                         tpl.unknowns, elimination)


def _keep(*tpls: Template) -> Tuple[str, ...]:
    out: List[str] = []
    for t in tpls:
        for u in t.unknowns:
            if u not in out:
                out.append(u)
    return tuple(out)


def consec_tabular(t: Transition, vars_: Sequence[str], src: Template, dst: Template,
                   mu: Fraction = Fraction(1), with_unsat_row: bool = False,
                   extra_rows: Sequence[Constraint] = (), elimination: str = "project") -> Polyhedron:
    """Coefficients for which ``mu * eta(src) + guard rows`` yields ``eta(dst)'`` (or ``-1 >= 0``)."""
    X = tuple(vars_)
    XX = X + tuple(prime(v) for v in X)
    rows = tuple(t.guard.constraints) + tuple(extra_rows)
    mu = Fraction(mu)
    premise = None
    if mu != 0:
        premise = ({v: e.scale(mu) for v, e in src.coeff_exprs(X).items()}, src.const_expr().scale(mu))
    keep = _keep(src, dst)
    if with_unsat_row:
        return _farkas_space(rows, XX, premise, {}, LinearExpr.const(-1), keep, elimination)
    target = {prime(v): e for v, e in dst.coeff_exprs(X).items()}
    return _farkas_space(rows, XX, premise, target, dst.const_expr(), keep, elimination)


def known_consec_tabular(rows: Sequence[Constraint], vars_: Sequence[str], dst: Template,
                         elimination: str = "project") -> Polyhedron:
    """Coefficients of ``eta(dst)'`` implied by concrete rows over X and X'."""
    X = tuple(vars_)
    XX = X + tuple(prime(v) for v in X)
    target = {prime(v): e for v, e in dst.coeff_exprs(X).items()}
    return _farkas_space(rows, XX, None, target, dst.const_expr(), dst.unknowns, elimination)


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def _instantiate(gens, tpls: Sequence[Template], vars_: Sequence[str]) -> Dict[Location, List[Constraint]]:
    out: Dict[Location, List[Constraint]] = {t.loc: [] for t in tpls}
    idx = {u: i for i, u in enumerate(gens.vars)}
    for g in gens.gens:
        for t in tpls:
            c = {v: g.coords[idx[u]] for v, u in zip(vars_, t.coeffs)}
            d = g.coords[idx[t.const]]
            k = Constraint(LinearExpr(c, d), EQ if g.kind is LINE else GEQ)
            if k.is_trivial():
                continue
            out[t.loc].append(k.normalized() if not k.expr.is_constant() else k)
    return out


def _expand(clauses: List[List[Polyhedron]], universe: Polyhedron, opts: SolverOptions,
            stats: SolverStats, deadline: Optional[float]):
    """Yield the maximal nonempty conjunctions of the CNF, sharing prefixes.

    A clause already implied by the current prefix is skipped: its other
    alternatives only give sub-cones, whose instantiated inequalities follow
    from the prefix's own.
    """
    clauses = sorted(clauses, key=len)
    stats.clauses += len(clauses)
    produced = [0]

    def rec(k: int, cur: Polyhedron):
        if deadline is not None and time.monotonic() > deadline:
            raise AnalysisTimeout("analysis timed out")
        while k < len(clauses) and len(clauses[k]) > 1 and any(includes(alt, cur) for alt in clauses[k]):
            k += 1
        if k == len(clauses):
            produced[0] += 1
            if produced[0] > opts.dnf_cap:
                raise DnfExplosionError(
                    f"coefficient constraints expand to more than {opts.dnf_cap} conjunctions")
            yield cur
            return
        for alt in clauses[k]:
            nxt = cur.add_constraints(alt.constraints)
            if is_empty(nxt):
                continue
            yield from rec(k + 1, nxt)

    yield from rec(0, universe)


def solve_group(ats: Ats, group: Sequence[Location], context: AssertionMap,
                opts: Optional[SolverOptions] = None, strengthen: Optional[AssertionMap] = None,
                inits: Optional[Sequence[Tuple[Location, Polyhedron]]] = None,
                stats: Optional[SolverStats] = None,
                deadline: Optional[float] = None) -> Dict[Location, Polyhedron]:
    """Jointly solve the template rows of ``group`` given solved invariants in ``context``.

    Transitions inside the group contribute one alternative per ``mu`` value
    (plus the unsatisfiability row); transitions entering the group from a
    solved location contribute one conjunctive condition per disjunct of the
    source invariant.  ``inits`` overrides the initial conditions.
    """
    opts = opts or SolverOptions()
    stats = stats if stats is not None else SolverStats()
    X = ats.vars
    gset = set(group)
    tpls = {l: Template.of(l, X) for l in group}
    unknowns = _keep(*tpls.values())
    el = opts.elimination
    clauses: List[List[Polyhedron]] = []

    def lift(p: Polyhedron) -> Polyhedron:
        return p.with_vars(unknowns)

    init_list = list(inits) if inits is not None else [(p.loc, p.theta) for p in ats.init_parts]
    for loc, th in init_list:
        if loc in gset and not is_empty(th):
            clauses.append([lift(init_tabular(th, tpls[loc], el))])

    for t in ats.transitions:
        if t.dst not in gset:
            continue
        extra = _strengthen_rows(t, X, strengthen)
        if extra is None:
            continue
        if t.src in gset:
            alts = []
            for mu in opts.mu:
                alts.append(lift(consec_tabular(t, X, tpls[t.src], tpls[t.dst], mu, False, extra, el)))
            if opts.unsat_row:
                alts.append(lift(consec_tabular(t, X, tpls[t.src], tpls[t.dst], Fraction(1), True, extra, el)))
            clauses.append(_dedupe(alts))
        else:
            for phi in context.get(t.src, []):
                rows = tuple(phi.constraints) + tuple(t.guard.constraints) + tuple(extra)
                if is_empty(Polyhedron(ats.all_vars, rows)):
                    continue
                clauses.append([lift(known_consec_tabular(rows, X, tpls[t.dst], el))])

    result: Dict[Location, List[Constraint]] = {l: [] for l in group}
    if not clauses:
        return {l: Polyhedron.universe(X) for l in group}
    tlist = [tpls[l] for l in group]
    for leaf in _expand(clauses, Polyhedron.universe(unknowns), opts, stats, deadline):
        stats.leaves += 1
        gens = constraints_to_generators(leaf)
        for l, cs in _instantiate(gens, tlist, X).items():
            result[l].extend(cs)
    out = {}
    for l in group:
        out[l] = remove_redundant(Polyhedron(X, tuple(dict.fromkeys(result[l]))))
    return out


def _dedupe(alts: List[Polyhedron]) -> List[Polyhedron]:
    out: List[Polyhedron] = []
    for a in alts:
        if not any(includes(b, a) and includes(a, b) for b in out):
            out.append(a)
    return out


def _strengthen_rows(t: Transition, X: Sequence[str], strengthen: Optional[AssertionMap]):
    """Rows of earlier-round invariants at both ends of ``t``; None when the transition is vacuous."""
    if not strengthen:
        return ()
    rows: List[Constraint] = []
    pm = prime_map(X)
    for loc, primed in ((t.src, False), (t.dst, True)):
        if loc.is_exit or loc not in strengthen:
            continue
        inv = strengthen[loc]
        if not inv:
            return None
        if len(inv) != 1:
            continue
        cs = inv[0].constraints
        rows.extend(c.rename(pm) if primed else c for c in cs)
    return tuple(rows)


def solve_location(ats: Ats, loc: Location, context: AssertionMap,
                   opts: Optional[SolverOptions] = None) -> List[Polyhedron]:
    """Location-at-a-time solving; the result is a one-clause DNF (or empty)."""
    inv = solve_group(ats, [loc], context, opts)[loc]
    return [] if is_empty(inv) else [inv]


def _reachable(ats: Ats) -> set:
    g = digraph(ats)
    seen = set()
    for p in ats.init_parts:
        if not is_empty(p.theta):
            seen.add(p.loc)
            seen |= nx.descendants(g, p.loc)
    return seen


def solve_order(ats: Ats) -> List[List[Location]]:
    """Branch-location SCCs in topological order."""
    g = digraph(ats)
    g.remove_node(ats.exit)
    cond = nx.condensation(g)
    order = []
    for n in nx.lexicographical_topological_sort(cond, key=lambda n: min(str(l) for l in cond.nodes[n]["members"])):
        members = sorted(cond.nodes[n]["members"], key=lambda l: (l.index, l.id))
        order.append(members)
    return order


def solve_all(ats: Ats, opts: Optional[SolverOptions] = None,
              strengthen: Optional[AssertionMap] = None,
              stats: Optional[SolverStats] = None) -> AssertionMap:
    """Solve every branch location in SCC order and derive the exit invariant."""
    opts = opts or SolverOptions()
    stats = stats if stats is not None else SolverStats()
    t0 = time.monotonic()
    deadline = t0 + opts.timeout if opts.timeout else None
    reach = _reachable(ats)
    aam: AssertionMap = {}
    for group in solve_order(ats):
        live = [l for l in group if l in reach]
        for l in group:
            if l not in reach:
                aam[l] = []
        if not live:
            continue
        res = solve_group(ats, live, aam, opts, strengthen, stats=stats, deadline=deadline)
        for l in live:
            aam[l] = [] if is_empty(res[l]) else [res[l]]
    aam[ats.exit] = derive_exit(ats, aam)
    stats.seconds += time.monotonic() - t0
    return aam


def derive_exit(ats: Ats, aam: AssertionMap) -> List[Polyhedron]:
    """Images of the branch invariants under the exit transitions, plus never-entered states."""
    X = ats.vars

    parts: List[Polyhedron] = list(ats.theta_exit)
    for t in ats.transitions:
        if not t.dst.is_exit:
            continue
        for phi in aam.get(t.src, []):
            parts.append(image(phi, t, X))
    parts = [p for p in parts if not is_empty(p)]
    if ats.mode == INT:
        parts = [p for p in parts if not _no_integer_point(p)]
    return simplify_dnf(parts)


def _no_integer_point(p: Polyhedron) -> bool:
    """Cheap sufficient test: some equality has no integer solution."""
    for c in p.constraints:
        if c.relation is not EQ:
            continue
        n = c.normalized()
        g = 0
        for a in n.expr.coeffs.values():
            g = gcd(g, int(a))
        if g > 1 and int(n.expr.constant) % g:
            return True
    return False


def image(phi: Polyhedron, t: Transition, X: Sequence[str]) -> Polyhedron:
    """Post-states of ``t`` from ``phi``, over the unprimed variables."""
    X = tuple(X)
    XX = X + tuple(prime(v) for v in X)
    p = Polyhedron(XX, tuple(phi.constraints) + tuple(t.guard.constraints))
    if is_empty(p):
        return Polyhedron.empty(X)
    q = project(p, tuple(prime(v) for v in X))
    return q.rename(unprime_map(X))


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    ok: bool
    method: str = "clause"
    failing: Optional[str] = None
    counterexample: Optional[Dict[str, int]] = None
    obligations: int = 0

    def __bool__(self):
        return self.ok


_METHOD_RANK = {"clause": 0, "split": 1, "sampling": 2}


def _covered(piece: Polyhedron, union: Sequence[Polyhedron], box, integer: bool):
    """Return (verdict, method, counterexample) for ``piece`` within ``union``."""
    if is_empty(piece) or (integer and _no_integer_point(piece)):
        return True, "clause", None
    if any(includes(u, piece) for u in union):
        return True, "clause", None
    r = dnf_difference_empty(piece, list(union), integer=False)
    if r is True:
        return True, "split", None
    if r is False and not integer:
        return False, "split", None
    if integer:
        r2 = dnf_difference_empty(piece, list(union), integer=True)
        if r2 is True:
            return True, "split", None
    # sample integer points of the piece within the box
    if box is None:
        return False, "split", None
    ok, cex = _sample_cover(piece, union, box)
    return ok, "sampling", cex


def _sample_cover(piece: Polyhedron, union: Sequence[Polyhedron], box, limit: int = 200000):
    vs = piece.vars
    ranges = []
    for v in vs:
        lo, hi = box.get(v, (-10, 110))
        ranges.append(range(lo, hi + 1))
    count = 0
    for pt in itertools.product(*ranges):
        count += 1
        if count > limit:
            break
        s = dict(zip(vs, pt))
        if piece.contains_point(s) and not any(u.contains_point(s) for u in union):
            return False, s
    return True, None


def check_inductive(ats: Ats, aam: AssertionMap, box: Optional[Dict[str, Tuple[int, int]]] = None,
                    integer: bool = True) -> CheckResult:
    """Initialization and consecution of a disjunctive map, over all transitions."""
    X = ats.vars
    method = "clause"
    n = 0

    def note(m):
        nonlocal method
        if _METHOD_RANK[m] > _METHOD_RANK[method]:
            method = m

    for p in ats.init_parts:
        n += 1
        ok, m, cex = _covered(p.theta, aam.get(p.loc, []), box, integer)
        note(m)
        if not ok:
            return CheckResult(False, m, f"initialization at {p.loc}", cex, n)
    for p in ats.theta_exit:
        n += 1
        ok, m, cex = _covered(p, aam.get(ats.exit, []), box, integer)
        note(m)
        if not ok:
            return CheckResult(False, m, "initialization at exit (loop not entered)", cex, n)
    for t in ats.transitions:
        for i, phi in enumerate(aam.get(t.src, [])):
            n += 1
            img = image(phi, t, X)
            ok, m, cex = _covered(img, aam.get(t.dst, []), box, integer)
            note(m)
            if not ok:
                lab = t.label or f"{t.src}->{t.dst}"
                return CheckResult(False, m, f"consecution {lab} ({t.src}->{t.dst}) from disjunct {i + 1}", cex, n)
    return CheckResult(True, method, None, None, n)


# ---------------------------------------------------------------------------
# incremental strengthening
# ---------------------------------------------------------------------------

def conjoin_maps(a: AssertionMap, b: AssertionMap) -> AssertionMap:
    out: AssertionMap = {}
    for loc in set(a) | set(b):
        da, db = a.get(loc), b.get(loc)
        if da is None or db is None:
            out[loc] = da if db is None else db
            continue
        parts = [x & y for x in da for y in db]
        out[loc] = simplify_dnf(parts)
    return out


def incremental_strengthen(ats: Ats, rounds: int = 1, opts: Optional[SolverOptions] = None,
                           stats: Optional[SolverStats] = None, first: Optional[AssertionMap] = None) -> AssertionMap:
    """Re-solve with earlier invariants injected as guard rows; results are conjoined."""
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    aam = first if first is not None else solve_all(ats, opts, stats=stats)
    for _ in range(rounds - 1):
        nxt = solve_all(ats, opts, strengthen=aam, stats=stats)
        merged = conjoin_maps(aam, nxt)
        merged[ats.exit] = _meet_exit(derive_exit(ats, merged), merged[ats.exit])
        aam = merged
    return aam


def _meet_exit(a: List[Polyhedron], b: List[Polyhedron]) -> List[Polyhedron]:
    return simplify_dnf([x & y for x in a for y in b])
