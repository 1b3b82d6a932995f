"""Affine transition systems built from canonical loops.

One location per branch plus a single termination location.  A transition
guard is a polyhedron over the current variables followed by their primed
copies; disjunctive guards are split into one transition per clause.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from .canonical import BREAK, Branch, CanonicalLoop
from .loop_ir import DNF, INT, Not, to_dnf
from .polyhedra import (EQ, Constraint, LinearExpr, Polyhedron, format_conjunction, is_empty,
                        remove_redundant)
from .ratlin import Matrix


class LocKind(enum.Enum):
    BRANCH = "branch"
    TERMINATION = "termination"


@dataclass(frozen=True, order=True)
class Location:
    id: str
    kind: LocKind = field(default=LocKind.BRANCH, compare=False)
    index: int = field(default=-1, compare=False)

    @property
    def is_exit(self) -> bool:
        return self.kind is LocKind.TERMINATION

    def __str__(self):
        return self.id


@dataclass(frozen=True)
class Transition:
    src: Location
    dst: Location
    guard: Polyhedron
    # simultaneous affine update x' = A x + b when known
    update: Optional[Tuple[Matrix, Tuple[Fraction, ...]]] = field(default=None, compare=False)
    label: str = field(default="", compare=False)


@dataclass(frozen=True)
class InitPart:
    loc: Location
    theta: Polyhedron


@dataclass(frozen=True)
class Ats:
    vars: Tuple[str, ...]
    locations: Tuple[Location, ...]
    transitions: Tuple[Transition, ...]
    init_parts: Tuple[InitPart, ...]
    # initial states that never enter the loop
    theta_exit: Tuple[Polyhedron, ...] = ()
    # location -> entry condition (guard and branch condition)
    loc_conditions: Tuple[Tuple[Location, Tuple[Polyhedron, ...]], ...] = ()
    mode: str = INT

    @property
    def primed(self) -> Tuple[str, ...]:
        return tuple(prime(v) for v in self.vars)

    @property
    def all_vars(self) -> Tuple[str, ...]:
        return self.vars + self.primed

    @property
    def exit(self) -> Location:
        return next(l for l in self.locations if l.is_exit)

    @property
    def branch_locations(self) -> List[Location]:
        return [l for l in self.locations if not l.is_exit]

    @property
    def initial(self) -> Optional[Location]:
        return self.init_parts[0].loc if self.init_parts else None

    @property
    def theta(self) -> List[Polyhedron]:
        return [p.theta for p in self.init_parts] + list(self.theta_exit)

    def incoming(self, loc: Location) -> List[Transition]:
        return [t for t in self.transitions if t.dst == loc]

    def outgoing(self, loc: Location) -> List[Transition]:
        return [t for t in self.transitions if t.src == loc]

    def condition(self, loc: Location) -> Tuple[Polyhedron, ...]:
        for l, c in self.loc_conditions:
            if l == loc:
                return c
        return (Polyhedron.universe(self.vars),)


class NoInitialBranchError(ValueError):
    pass


def prime(v: str) -> str:
    return v + "'"


def prime_map(vars_: Sequence[str]) -> Dict[str, str]:
    return {v: prime(v) for v in vars_}


def unprime_map(vars_: Sequence[str]) -> Dict[str, str]:
    return {prime(v): v for v in vars_}


def update_constraints(vars_: Sequence[str], A: Matrix, b: Sequence[Fraction]) -> List[Constraint]:
    """Rows ``x' = A x + b``."""
    out = []
    for i, v in enumerate(vars_):
        e = LinearExpr({w: A[i, j] for j, w in enumerate(vars_)}, b[i])
        out.append(Constraint(LinearExpr.var(prime(v)) - e, EQ))
    return out


def _conj(vars_, *parts) -> Polyhedron:
    cons = []
    for p in parts:
        cons.extend(p)
    return Polyhedron(tuple(vars_), tuple(cons))


def build_ats(loop: CanonicalLoop, theta: DNF, prune: bool = True) -> Ats:
    """Step from branch to branch: each location is a branch at the loop head."""
    X = loop.vars
    XX = X + tuple(prime(v) for v in X)
    pm = prime_map(X)
    mode = loop.mode
    g_dnf = to_dnf(loop.guard, mode)
    ng_dnf = to_dnf(Not(loop.guard), mode)
    locs = [Location(f"l{i + 1}", LocKind.BRANCH, i) for i in range(len(loop.branches))]
    exit_loc = Location("le", LocKind.TERMINATION)
    trans: List[Transition] = []

    def add(src, dst, cons, br: Branch, label: str):
        p = _conj(XX, cons)
        if prune and is_empty(p):
            return
        trans.append(Transition(src, dst, remove_redundant(p),
                                (br.update_matrix, br.update_offset), label))

    for i, br in enumerate(loop.branches):
        upd = update_constraints(X, br.update_matrix, br.update_offset)
        here = [g + br.cond for g in g_dnf]
        for hi, h in enumerate(here):
            if br.exit is BREAK:
                add(locs[i], exit_loc, list(h) + upd, br, f"t{i + 1}e")
                continue
            for j, bj in enumerate(loop.branches):
                for g2 in g_dnf:
                    nxt = [c.rename(pm) for c in g2 + bj.cond]
                    add(locs[i], locs[j], list(h) + nxt + upd, br, f"t{i + 1}{j + 1}")
            for n in ng_dnf:
                nxt = [c.rename(pm) for c in n]
                add(locs[i], exit_loc, list(h) + nxt + upd, br, f"t{i + 1}e")

    parts: List[InitPart] = []
    never: List[Polyhedron] = []
    for t in theta:
        for i, br in enumerate(loop.branches):
            for g in g_dnf:
                p = Polyhedron(X, tuple(t) + g + br.cond)
                if not is_empty(p):
                    parts.append(InitPart(locs[i], remove_redundant(p)))
        for n in ng_dnf:
            p = Polyhedron(X, tuple(t) + n)
            if not is_empty(p):
                never.append(remove_redundant(p))
    conds = tuple((locs[i], tuple(Polyhedron(X, g + br.cond) for g in g_dnf))
                  for i, br in enumerate(loop.branches))
    return Ats(X, tuple(locs) + (exit_loc,), tuple(trans), tuple(parts), tuple(never), conds, mode)


def initial_location(ats: Ats) -> Location:
    """The first branch location reachable from the initial condition."""
    if not ats.init_parts:
        if ats.theta_exit:
            raise NoInitialBranchError("the initial condition never enters the loop")
        raise NoInitialBranchError("the initial condition is unsatisfiable")
    return ats.init_parts[0].loc


def initial_locations(ats: Ats) -> List[Location]:
    out = []
    for p in ats.init_parts:
        if p.loc not in out:
            out.append(p.loc)
    return out


def digraph(ats: Ats) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(ats.locations)
    for t in ats.transitions:
        g.add_edge(t.src, t.dst)
    return g


def format_ats(ats: Ats, style: str = "unicode") -> str:
    lines = [f"X = {{{', '.join(ats.vars)}}}"]
    lines.append("L = {" + ", ".join(
        str(l) + ("*" if l in initial_locations(ats) else "") for l in ats.locations) + "}")
    for k, t in enumerate(ats.transitions, 1):
        lines.append(f"tau{k}: <{t.src}, {t.dst}, rho{k}>")
    for k, t in enumerate(ats.transitions, 1):
        lines.append(f"rho{k}: {format_conjunction(t.guard.constraints, ats.all_vars, style)}")
    for p in ats.init_parts:
        lines.append(f"theta@{p.loc}: {format_conjunction(p.theta.constraints, ats.vars, style)}")
    for p in ats.theta_exit:
        lines.append(f"theta@exit: {format_conjunction(p.constraints, ats.vars, style)}")
    return "\n".join(lines)
