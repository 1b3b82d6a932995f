"""Transition systems for loops whose bodies contain inner loops.

The body becomes a control flow graph in which every outermost inner loop
is a single node jumping straight to its successor.  Each path through that
graph is executed symbolically; an inner loop node replaces the current
values by fresh result variables tied to them through the inner loop's
summary.  Every clause of a path condition becomes one location.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .ats import Ats, InitPart, Location, LocKind, Transition, prime
from .canonical import BRANCH_CAP, BranchExplosionError
from .loop_ir import DNF, INT, Assign, Break, If, Nondet, Not, Stmt, While, format_pap, to_dnf
from .polyhedra import (EQ, Constraint, LinearExpr, Polyhedron, format_dnf,
                        format_expr, is_empty, project, remove_redundant)
from .ratlin import Matrix

if TYPE_CHECKING:
    from .summary import Summary


class NodeKind(enum.Enum):
    ASSIGN = "assign"
    BRANCH = "branch"
    LOOP = "loop"
    BREAK = "break"
    EXIT = "exit"


class Terminal(enum.Enum):
    LOOP_END = "LOOP-END"
    BREAK = "BREAK"


class MissingSummaryError(KeyError):
    pass


@dataclass(frozen=True)
class CfgNode:
    id: int
    kind: NodeKind
    stmt: Optional[Stmt] = None

    def describe(self, order: Sequence[str] = ()) -> str:
        s = self.stmt
        if self.kind is NodeKind.ASSIGN:
            return "; ".join(f"{t}={format_expr(e, order)}" for t, e in zip(s.targets, s.exprs))
        if self.kind is NodeKind.BRANCH:
            return f"if {format_pap(s.cond, order)}"
        if self.kind is NodeKind.LOOP:
            return f"inner while {format_pap(s.guard, order)}"
        return self.kind.value


@dataclass
class Cfg:
    nodes: Dict[int, CfgNode]
    # successor lists; the label is "then"/"else" out of a branch node
    edges: Dict[int, List[Tuple[int, Optional[str]]]]
    entry: int
    exit: int

    def successors(self, n: int) -> List[Tuple[int, Optional[str]]]:
        return self.edges.get(n, [])

    def inner_loops(self) -> Dict[int, While]:
        return {n.id: n.stmt for n in self.nodes.values() if n.kind is NodeKind.LOOP}

    def digraph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for u, succ in self.edges.items():
            for v, lab in succ:
                g.add_edge(u, v, label=lab)
        return g


def build_cfg(loop: While) -> Cfg:
    """CFG of ``loop``'s body; outermost inner loops are collapsed to one node."""
    raw_nodes: Dict[int, CfgNode] = {}
    raw_edges: Dict[int, List[Tuple[int, Optional[str]]]] = {}
    counter = [0]

    def new(kind, stmt=None) -> int:
        counter[0] += 1
        raw_nodes[counter[0]] = CfgNode(counter[0], kind, stmt)
        return counter[0]

    def seq(stmts: Sequence[Stmt], cont: int) -> int:
        for s in reversed(stmts):
            cont = one(s, cont)
        return cont

    def one(s: Stmt, cont: int) -> int:
        if isinstance(s, Assign):
            n = new(NodeKind.ASSIGN, s)
            raw_edges[n] = [(cont, None)]
        elif isinstance(s, Break):
            n = new(NodeKind.BREAK, s)
        elif isinstance(s, While):
            n = new(NodeKind.LOOP, s)
            raw_edges[n] = [(cont, None)]
        elif isinstance(s, If):
            t = seq(s.then, cont)
            e = seq(s.orelse, cont)
            n = new(NodeKind.BRANCH, s)
            raw_edges[n] = [(t, "then"), (e, "else")]
        else:
            raise TypeError(s)
        return n

    end = new(NodeKind.EXIT)
    entry = seq(loop.body, end)
    # renumber in depth-first program order
    order: List[int] = []
    stack = [entry]
    while stack:
        u = stack.pop()
        if u in order:
            continue
        order.append(u)
        stack.extend(v for v, _ in reversed(raw_edges.get(u, [])))
    if end not in order:
        order.append(end)
    ren = {old: i + 1 for i, old in enumerate(order)}
    nodes = {ren[o]: CfgNode(ren[o], raw_nodes[o].kind, raw_nodes[o].stmt) for o in order}
    edges = {ren[u]: [(ren[v], lab) for v, lab in succ] for u, succ in raw_edges.items() if u in ren}
    return Cfg(nodes, edges, ren[entry], ren[end])


@dataclass(frozen=True)
class ExecPath:
    # (node, label of the edge taken out of it)
    steps: Tuple[Tuple[int, Optional[str]], ...]
    terminal: Terminal

    @property
    def nodes(self) -> Tuple[int, ...]:
        return tuple(n for n, _ in self.steps)


def execution_paths(cfg: Cfg) -> List[ExecPath]:
    out: List[ExecPath] = []

    def walk(u: int, acc: Tuple):
        node = cfg.nodes[u]
        if node.kind is NodeKind.EXIT:
            out.append(ExecPath(acc + ((u, None),), Terminal.LOOP_END))
            return
        if node.kind is NodeKind.BREAK:
            out.append(ExecPath(acc + ((u, None),), Terminal.BREAK))
            return
        for v, lab in cfg.successors(u):
            walk(v, acc + ((u, lab),))

    walk(cfg.entry, ())
    return out


@dataclass(frozen=True)
class PathSummary:
    path: ExecPath
    psi: Tuple[Tuple[Constraint, ...], ...]
    alpha: Tuple[LinearExpr, ...]
    fresh: Tuple[str, ...] = ()
    # (node, alpha after the node, psi after the node) for display
    trace: Tuple = field(default=(), compare=False)

    @property
    def terminal(self) -> Terminal:
        return self.path.terminal


def fresh_names(vars_: Sequence[str], k: int) -> Tuple[str, ...]:
    return tuple(f"{v}~{k}" for v in vars_)


def _conj(a: DNF, b: DNF, vars_: Sequence[str]) -> DNF:
    out = []
    for x in a:
        for y in b:
            c = tuple(dict.fromkeys(x + y))
            if any(k.is_contradiction() for k in c):
                continue
            if not is_empty(Polyhedron(tuple(vars_), c)):
                out.append(c)
    if len(out) > BRANCH_CAP:
        raise BranchExplosionError(f"path condition expands to more than {BRANCH_CAP} clauses")
    return out


def _subst_dnf(d: DNF, sub: Mapping[str, LinearExpr]) -> DNF:
    out = []
    for cl in d:
        cs = [c.substitute(sub).normalized() for c in cl]
        if any(c.is_contradiction() for c in cs):
            continue
        out.append(tuple(c for c in cs if not c.is_trivial()))
    return out


def symbolic_exec(path: ExecPath, cfg: Cfg, summaries: Mapping[int, "Summary"],
                  vars_: Sequence[str], mode: str = INT) -> PathSummary:
    """Values after ``path`` and the condition for taking it, over the variables and fresh results."""
    vars_ = tuple(vars_)
    alpha = {v: LinearExpr.var(v) for v in vars_}
    psi: DNF = [()]
    scope = list(vars_)
    fresh: List[str] = []
    trace = []
    k = 0
    for nid, lab in path.steps:
        node = cfg.nodes[nid]
        if node.kind is NodeKind.ASSIGN:
            s = node.stmt
            upd = dict(alpha)
            for t, e in zip(s.targets, s.exprs):
                upd[t] = e.substitute(alpha)
            alpha = upd
        elif node.kind is NodeKind.BRANCH:
            cond = node.stmt.cond
            if not isinstance(cond, Nondet):
                d = to_dnf(cond if lab == "then" else Not(cond), mode)
                psi = _conj(psi, _subst_dnf(d, alpha), scope)
        elif node.kind is NodeKind.LOOP:
            if nid not in summaries:
                raise MissingSummaryError(f"no summary for the inner loop at node {nid}")
            k += 1
            out = fresh_names(vars_, k)
            fresh.extend(out)
            scope.extend(out)
            rel = summaries[nid].instantiate([alpha[v] for v in vars_], out)
            psi = _conj(psi, rel, scope)
            alpha = {v: LinearExpr.var(o) for v, o in zip(vars_, out)}
        else:
            break
        trace.append((nid, tuple(alpha[v] for v in vars_), tuple(psi)))
    return PathSummary(path, tuple(psi), tuple(alpha[v] for v in vars_), tuple(fresh), tuple(trace))


def _update_of(alpha: Sequence[LinearExpr], vars_: Sequence[str]):
    if any(set(e.variables) - set(vars_) for e in alpha):
        return None
    A = Matrix.from_rows([[e.coeff(w) for w in vars_] for e in alpha], len(vars_))
    return A, tuple(e.constant for e in alpha)


@dataclass(frozen=True)
class _Loc:
    loc: Location
    ps: PathSummary
    cond: Tuple[Constraint, ...]


def build_nested_ats(loop: While, summaries: Mapping[int, "Summary"], theta: DNF,
                     with_inputs: bool = False, vars_: Sequence[str] = (), mode: str = INT,
                     cfg: Optional[Cfg] = None, prune: bool = True) -> Ats:
    """One location per feasible clause of each path condition (with the loop guard)."""
    X = tuple(vars_)
    XP = tuple(prime(v) for v in X)
    XX = X + XP
    cfg = cfg or build_cfg(loop)
    g_dnf = to_dnf(loop.guard, mode)
    ng_dnf = to_dnf(Not(loop.guard), mode)
    locs: List[_Loc] = []
    for path in execution_paths(cfg):
        ps = symbolic_exec(path, cfg, summaries, X, mode)
        scope = X + ps.fresh
        for cl in ps.psi:
            for g in g_dnf:
                c = tuple(dict.fromkeys(g + cl))
                if is_empty(Polyhedron(scope, c)):
                    continue
                idx = len(locs)
                locs.append(_Loc(Location(f"l{idx + 1}", LocKind.BRANCH, idx), ps, c))
                if len(locs) > BRANCH_CAP:
                    raise BranchExplosionError(f"nested loop expands to more than {BRANCH_CAP} locations")
    exit_loc = Location("le", LocKind.TERMINATION)
    pm = {v: prime(v) for v in X}
    trans: List[Transition] = []

    def add(src: _Loc, dst: Location, rows, extra_vars, label):
        p = Polyhedron(XX + tuple(extra_vars), tuple(rows))
        if is_empty(p):
            if prune:
                return
        q = project(p, XX) if extra_vars else remove_redundant(p)
        trans.append(Transition(src.loc, dst, q, _update_of(src.ps.alpha, X), label))

    for a in locs:
        step = [Constraint(LinearExpr.var(prime(v)) - e, EQ) for v, e in zip(X, a.ps.alpha)]
        here = list(a.cond) + step
        ia = a.loc.index + 1
        if a.ps.terminal is Terminal.BREAK:
            add(a, exit_loc, here, a.ps.fresh, f"t{ia}e")
            continue
        for b in locs:
            ren = dict(pm)
            ren.update({f: prime(f) for f in b.ps.fresh})
            nxt = [c.rename(ren) for c in b.cond]
            add(a, b.loc, here + nxt, a.ps.fresh + tuple(prime(f) for f in b.ps.fresh),
                f"t{ia}{b.loc.index + 1}")
        for n in ng_dnf:
            add(a, exit_loc, here + [c.rename(pm) for c in n], a.ps.fresh, f"t{ia}e")

    parts: List[InitPart] = []
    never: List[Polyhedron] = []
    conds = []
    for a in locs:
        conds.append((a.loc, (_shadow(a.cond, X, a.ps.fresh),)))
    for t in theta:
        for a in locs:
            p = _shadow(tuple(t) + a.cond, X, a.ps.fresh)
            if not is_empty(p):
                parts.append(InitPart(a.loc, p))
        for n in ng_dnf:
            p = Polyhedron(X, tuple(t) + n)
            if not is_empty(p):
                never.append(remove_redundant(p))
    ats = Ats(X, tuple(a.loc for a in locs) + (exit_loc,), tuple(trans), tuple(parts), tuple(never),
              tuple(conds), mode)
    if with_inputs:
        from .summary import instrument_inputs

        ats = instrument_inputs(ats)[0]
    return ats


def _shadow(cons: Sequence[Constraint], X: Tuple[str, ...], fresh: Sequence[str]) -> Polyhedron:
    p = Polyhedron(X + tuple(fresh), tuple(cons))
    if is_empty(p):
        return Polyhedron.empty(X)
    return project(p, X) if fresh else remove_redundant(p)


def format_paths(cfg: Cfg, summaries: Mapping[int, "Summary"], vars_: Sequence[str],
                 mode: str = INT, style: str = "unicode") -> str:
    X = tuple(vars_)
    lines = []
    for k, path in enumerate(execution_paths(cfg), 1):
        ps = symbolic_exec(path, cfg, summaries, X, mode)
        order = X + ps.fresh
        lines.append(f"path {k} ({path.terminal.value}): " + " -> ".join(
            f"n{n}[{cfg.nodes[n].describe(X)}]" for n in path.nodes))
        for nid, alpha, psi in ps.trace:
            vals = ", ".join(format_expr(e, order) for e in alpha)
            lines.append(f"  after n{nid}: alpha=[{vals}]  beta={_fmt_dnf(psi, order, style)}")
        vals = ", ".join(format_expr(e, order) for e in ps.alpha)
        lines.append(f"  alpha_path=[{vals}]")
        lines.append(f"  psi_path={_fmt_dnf(ps.psi, order, style)}")
    return "\n".join(lines)


def _fmt_dnf(d, order, style) -> str:
    if list(d) == [()]:
        return "true"
    return format_dnf([Polyhedron(tuple(order), tuple(cl)) for cl in d], order, style)
