"""Invariant propagation.

Only the initial location is solved from the initial condition.  Every other
location receives the images of its predecessors' invariants as initial
conditions and is solved with its self-loops alone.  Images use the inverse
update when it exists and a parametric preimage otherwise, so no general
projection over all variables is needed.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .ats import Ats, Location, Transition, digraph, initial_locations, prime, unprime_map
from .farkas import (AssertionMap, SolverOptions, SolverStats, check_inductive, derive_exit, image,
                     incremental_strengthen,
                     solve_all, solve_group)
from .polyhedra import (EQ, Constraint, LinearExpr, Polyhedron, constraints_to_generators, dnf_includes, is_empty, project, remove_redundant, simplify_dnf)
from .loop_ir import INT
from .ratlin import Matrix, SingularMatrixError, affine_preimage, invert

DFS_BUDGET = 10000


class EdgeClass(enum.Enum):
    TREE = "tree"
    BACK = "back"
    FORWARD = "forward"
    CROSS = "cross"


@dataclass
class DfsTree:
    root: Location
    parent: Dict[Location, Optional[Location]]
    edge_class: Dict[Tuple[Location, Location], EdgeClass]
    order: List[Location] = field(default_factory=list)

    def children(self, u: Location) -> List[Location]:
        return [v for v in self.order if self.parent.get(v) == u]

    def levels(self) -> List[List[Location]]:
        out: List[List[Location]] = []
        front = [v for v in self.order if self.parent.get(v) is None]
        while front:
            out.append(front)
            front = [c for u in front for c in self.children(u)]
        return out


class BudgetExceeded(Exception):
    pass


def find_noncrossing_dfs(g: nx.DiGraph, root, budget: int = DFS_BUDGET, extra_roots: Sequence = ()):
    """A DFS forest with only tree and back edges, searching over child orders.

    Returns ``(tree, reason)``; ``tree`` is None when no order works or the
    budget of node visits runs out.
    """
    visits = [0]

    def visit(u, state):
        visits[0] += 1
        if visits[0] > budget:
            raise BudgetExceeded()
        parent, onstack, finished, order = state
        st = (parent, onstack + (u,), finished, order + (u,))
        yield from expand(u, tuple(v for v in g.successors(u)), st)

    def expand(u, remaining, state):
        parent, onstack, finished, order = state
        if any(v in finished for v in remaining):
            return
        rest = tuple(v for v in remaining if v not in onstack)
        if not rest:
            yield (parent, onstack[:-1], finished | {u}, order)
            return
        for v in rest:
            p2 = dict(parent)
            p2[v] = u
            for st2 in visit(v, (p2, onstack, finished, order)):
                yield from expand(u, tuple(w for w in rest if w != v), st2)

    roots = [root] + [r for r in extra_roots if r != root]

    def forest(k, state):
        if k == len(roots):
            yield state
            return
        r = roots[k]
        if r in state[2]:
            yield from forest(k + 1, state)
            return
        p2 = dict(state[0])
        p2[r] = None
        for st in visit(r, (p2, state[1], state[2], state[3])):
            yield from forest(k + 1, st)

    try:
        for parent, _, finished, order in forest(0, ({}, (), frozenset(), ())):
            ec = {}
            for u in order:
                for v in g.successors(u):
                    ec[(u, v)] = EdgeClass.TREE if parent.get(v) == u and u != v else EdgeClass.BACK
            return DfsTree(root, parent, ec, list(order)), "non-crossing"
    except BudgetExceeded:
        return None, "not non-crossing (budget)"
    return None, "not non-crossing"


def _branch_graph(ats: Ats) -> nx.DiGraph:
    g = digraph(ats)
    g.remove_node(ats.exit)
    return g


# ---------------------------------------------------------------------------
# one propagation step
# ---------------------------------------------------------------------------

class InconsistentUpdateError(ValueError):
    pass


def _step_invertible(phi_rho: Sequence[Constraint], X, Ainv: Matrix, b) -> Polyhedron:
    # x = Ainv (x' - b)
    XP = [prime(v) for v in X]
    sub = {}
    for i, v in enumerate(X):
        e = LinearExpr()
        for j, w in enumerate(XP):
            a = Ainv[i, j]
            if a:
                e = e + LinearExpr({w: a}, -a * b[j])
        sub[v] = e
    cons = [c.substitute(sub).normalized() for c in phi_rho]
    cons = [c for c in cons if not c.is_trivial()]
    if any(c.is_contradiction() for c in cons):
        return Polyhedron.empty(tuple(X))
    return Polyhedron(tuple(XP), tuple(cons)).rename(unprime_map(X))


def _step_preimage(phi_rho: Sequence[Constraint], X, A: Matrix, b) -> Polyhedron:
    # x = C (x' - b) + sum a_k v_k, valid when consistency (x' - b) = 0
    pre = affine_preimage(A)
    XP = [prime(v) for v in X]
    params = [f"__a{k}" for k in range(len(pre.kernel_basis))]
    shifted = [LinearExpr.var(w) - b[j] for j, w in enumerate(XP)]
    sub = {}
    for i, v in enumerate(X):
        e = LinearExpr()
        for j in range(len(XP)):
            a = pre.particular_map[i, j]
            if a:
                e = e + shifted[j].scale(a)
        for k, vec in enumerate(pre.kernel_basis):
            if vec[i]:
                e = e + LinearExpr({params[k]: vec[i]})
        sub[v] = e
    cons = [c.substitute(sub).normalized() for c in phi_rho]
    for r in range(pre.consistency.rows):
        e = LinearExpr()
        for j in range(len(XP)):
            a = pre.consistency[r, j]
            if a:
                e = e + shifted[j].scale(a)
        cons.append(Constraint(e, EQ).normalized())
    cons = [c for c in cons if not c.is_trivial()]
    if any(c.is_contradiction() for c in cons):
        return Polyhedron.empty(tuple(X))
    p = Polyhedron(tuple(XP) + tuple(params), tuple(cons))
    if params:
        p = project(p, tuple(XP))
    return p.rename(unprime_map(X))


def propagate_step(src_inv: Sequence[Polyhedron], t: Transition, X: Sequence[str],
                   branch=None, path: str = "auto") -> List[Polyhedron]:
    """Initial condition for ``t.dst`` carried over from ``src_inv`` along ``t``.

    The update comes from ``branch`` when given, else from ``t.update``.
    ``path`` selects ``invertible``, ``preimage`` or ``project``; ``auto``
    picks the cheapest one that applies.
    """
    X = tuple(X)
    out = []
    upd = (branch.update_matrix, branch.update_offset) if branch is not None else t.update
    Ainv = None
    if upd is not None and path in ("auto", "invertible"):
        try:
            Ainv = invert(upd[0])
        except SingularMatrixError:
            if path == "invertible":
                raise
    for phi in src_inv:
        rows = tuple(phi.constraints) + tuple(t.guard.constraints)
        if upd is None or path == "project":
            k = image(phi, t, X)
        elif Ainv is not None:
            k = _step_invertible(rows, X, Ainv, upd[1])
        else:
            k = _step_preimage(rows, X, upd[0], upd[1])
        k = remove_redundant(k)
        if not is_empty(k):
            out.append(k)
    return out


# ---------------------------------------------------------------------------
# whole-system propagation
# ---------------------------------------------------------------------------

def _deadline(opts: SolverOptions) -> Optional[float]:
    return time.monotonic() + opts.timeout if opts.timeout else None


def _solve_from(ats: Ats, loc: Location, ks: Sequence[Polyhedron], opts, stats, deadline=None) -> List[Polyhedron]:
    """Invariant of the one-location system at ``loc`` for each initial clause in ``ks``."""
    out = []
    for k in ks:
        inv = solve_group(ats, [loc], {}, opts, inits=[(loc, k)], stats=stats, deadline=deadline)[loc]
        if not is_empty(inv):
            out.append(inv)
    return simplify_dnf(out)


def _init_parts_at(ats: Ats, loc: Location) -> List[Polyhedron]:
    return [p.theta for p in ats.init_parts if p.loc == loc]


def propagate_all(ats: Ats, tree: DfsTree, root_inv: Optional[List[Polyhedron]] = None,
                  opts: Optional[SolverOptions] = None, stats: Optional[SolverStats] = None) -> AssertionMap:
    """Breadth-first along the tree; back edges are ignored."""
    opts = opts or SolverOptions()
    stats = stats if stats is not None else SolverStats()
    X = ats.vars
    deadline = _deadline(opts)
    aam: AssertionMap = {}
    for level in tree.levels():
        for loc in level:
            ks = list(_init_parts_at(ats, loc))
            par = tree.parent.get(loc)
            if par is not None:
                for t in ats.transitions:
                    if t.src == par and t.dst == loc:
                        ks += propagate_step(aam.get(par, []), t, X)
            if loc == tree.root and root_inv is not None:
                aam[loc] = list(root_inv)
            else:
                aam[loc] = _solve_from(ats, loc, ks, opts, stats, deadline)
    for loc in ats.branch_locations:
        aam.setdefault(loc, [])
    aam[ats.exit] = derive_exit(ats, aam)
    return aam


def propagate_dag(ats: Ats, opts: Optional[SolverOptions] = None,
                  stats: Optional[SolverStats] = None) -> AssertionMap:
    """Propagation over an acyclic location graph (self-loops aside), using every incoming transition."""
    opts = opts or SolverOptions()
    stats = stats if stats is not None else SolverStats()
    X = ats.vars
    deadline = _deadline(opts)
    g = _branch_graph(ats)
    g.remove_edges_from([(u, u) for u in list(g.nodes) if g.has_edge(u, u)])
    aam: AssertionMap = {}
    for loc in nx.lexicographical_topological_sort(g, key=lambda l: (l.index, l.id)):
        ks = list(_init_parts_at(ats, loc))
        for t in ats.transitions:
            if t.dst == loc and t.src != loc and not t.src.is_exit:
                ks += propagate_step(aam.get(t.src, []), t, X)
        aam[loc] = _solve_from(ats, loc, ks, opts, stats, deadline)
    aam[ats.exit] = derive_exit(ats, aam)
    return aam


@dataclass
class PropagationReport:
    used: bool
    reason: str
    checked: Optional[bool] = None


def has_multilocation_scc(ats: Ats) -> bool:
    g = _branch_graph(ats)
    return any(len(c) > 1 for c in nx.strongly_connected_components(g))


def solve_with_propagation(ats: Ats, mode: str = "auto", opts: Optional[SolverOptions] = None,
                           stats: Optional[SolverStats] = None) -> Tuple[AssertionMap, PropagationReport]:
    """Dispatch on ``mode`` (``auto``, ``on``, ``off``)."""
    opts = opts or SolverOptions()
    if mode == "off" or not ats.init_parts:
        return solve_all(ats, opts, stats=stats), PropagationReport(False, "disabled" if mode == "off" else "no initial location")
    t0 = time.monotonic()
    if not has_multilocation_scc(ats):
        aam = propagate_dag(ats, opts, stats)
        if stats is not None:
            stats.seconds += time.monotonic() - t0
        return aam, PropagationReport(True, "acyclic apart from self-loops")
    if mode == "auto":
        return solve_all(ats, opts, stats=stats), PropagationReport(False, "multi-location SCC")
    g = _branch_graph(ats)
    inits = initial_locations(ats)
    tree, reason = find_noncrossing_dfs(g, inits[0], extra_roots=inits[1:])
    if tree is None:
        return solve_all(ats, opts, stats=stats), PropagationReport(False, reason)
    aam = propagate_all(ats, tree, None, opts, stats)
    if stats is not None:
        stats.seconds += time.monotonic() - t0
    if not check_inductive(ats, aam):
        return solve_all(ats, opts, stats=stats), PropagationReport(False, "propagated map not inductive", False)
    return aam, PropagationReport(True, reason, True)


@dataclass
class AnalysisOptions:
    propagate: str = "auto"
    rounds: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)


def analyze(ats: Ats, options: Optional[AnalysisOptions] = None,
            stats: Optional[SolverStats] = None) -> Tuple[AssertionMap, PropagationReport]:
    """Solve ``ats`` (propagating when allowed), then strengthen for the requested rounds."""
    options = options or AnalysisOptions()
    aam, rep = solve_with_propagation(ats, options.propagate, options.solver, stats)
    if options.rounds > 1:
        aam = incremental_strengthen(ats, options.rounds, options.solver, stats, first=aam)
    return aam, rep


# ---------------------------------------------------------------------------
# propagated vs plain solving
# ---------------------------------------------------------------------------

SAMPLE_LIMIT = 4096


def sample_points(p: Polyhedron, integer: bool = True, limit: int = SAMPLE_LIMIT) -> List[Dict[str, object]]:
    """Vertices, lattice points on vertex-to-vertex segments, vertex-plus-ray points and a grid
    over the vertex bounding box, filtered to the members of ``p``."""
    g = constraints_to_generators(p)
    pts = [g_.coords for g_ in g.points]
    dirs = [g_.coords for g_ in g.rays] + [g_.coords for g_ in g.lines]
    cand = list(pts)
    for u, v in itertools.combinations(pts, 2):
        cand += _segment_points(u, v)
    cand += [tuple(a + d for a, d in zip(u, r)) for u in pts for r in dirs]
    if pts:
        n = len(p.vars)
        lo = [min(u[i] for u in pts) for i in range(n)]
        hi = [max(u[i] for u in pts) for i in range(n)]
        k = 2
        while (k + 1) ** max(n, 1) <= limit:
            k += 1
        axes = [sorted({lo[i] + (hi[i] - lo[i]) * j / (k - 1) for j in range(k)}) for i in range(n)]
        cand += list(itertools.islice(itertools.product(*axes), limit))
    out, seen = [], set()
    for c in cand:
        if integer:
            c = tuple(int(x) if x.denominator == 1 else None for x in c)
            if None in c:
                continue
        if c in seen:
            continue
        seen.add(c)
        pt = dict(zip(p.vars, c))
        if p.contains_point(pt):
            out.append(pt)
    return out


def _segment_points(u, v, per_segment: int = 50):
    d = [b - a for a, b in zip(u, v)]
    den = 1
    for x in d:
        den = den * x.denominator // math.gcd(den, x.denominator)
    g = 0
    for x in d:
        g = math.gcd(g, int(x * den))
    steps = max(2, min(g, per_segment))
    return [tuple(a + x * Fraction(j, steps) for a, x in zip(u, d)) for j in range(1, steps)]


@dataclass
class Comparison:
    seconds_on: float
    seconds_off: float
    report: PropagationReport
    inductive_on: bool
    inductive_off: bool
    entails: Optional[bool]
    samples: int
    sample_failure: Optional[Tuple[Location, Dict[str, object]]] = None

    @property
    def sampled_ok(self) -> bool:
        return self.sample_failure is None


def compare_propagation(ats: Ats, opts: Optional[SolverOptions] = None) -> Tuple[Comparison, AssertionMap, AssertionMap]:
    """Solve with and without propagation; check every point of the propagated map lies in the plain one."""
    opts = opts or SolverOptions()
    t0 = time.monotonic()
    on, rep = solve_with_propagation(ats, "on", opts)
    t1 = time.monotonic()
    off, _ = solve_with_propagation(ats, "off", opts)
    t2 = time.monotonic()
    integer = ats.mode == INT
    entails: Optional[bool] = True
    n, failure = 0, None
    for loc in ats.locations:
        a, b = on.get(loc, []), off.get(loc, [])
        verdict = dnf_includes(b, a, integer=integer)
        if verdict is not True:
            entails = verdict if entails is True else entails
        for piece in a:
            for pt in sample_points(piece, integer):
                n += 1
                if failure is None and not any(q.contains_point(pt) for q in b):
                    failure = (loc, pt)
    cmp = Comparison(t1 - t0, t2 - t1, rep, bool(check_inductive(ats, on)), bool(check_inductive(ats, off)),
                     entails, n, failure)
    return cmp, on, off
