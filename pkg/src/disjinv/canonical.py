"""Rewriting an unnested loop body into top-level branches.

Each branch is a conjunction over the pre-state, one simultaneous affine
update and an exit kind.  Sequencing substitutes the first update into the
second condition, conditionals split on the condition and its negation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .loop_ir import (INT, Assign, Break, If, Nondet, Not, Pap, Program, Stmt, While,
                      contains_loop, format_pap, to_dnf)
from .polyhedra import Constraint, LinearExpr, Polyhedron, format_conjunction, format_expr, is_empty
from .ratlin import Matrix

BRANCH_CAP = 256


class Exit(enum.Enum):
    SKIP = "skip"
    BREAK = "break"


SKIP = Exit.SKIP
BREAK = Exit.BREAK


class NestedLoopError(ValueError):
    pass


class BranchExplosionError(RuntimeError):
    pass


Update = Dict[str, LinearExpr]


@dataclass(frozen=True)
class Branch:
    cond: Tuple[Constraint, ...]
    update_matrix: Matrix
    update_offset: Tuple[Fraction, ...]
    exit: Exit
    vars: Tuple[str, ...]

    @property
    def update(self) -> Update:
        """The update as ``var -> expression over the pre-state``."""
        out = {}
        for i, v in enumerate(self.vars):
            coeffs = {w: self.update_matrix[i, j] for j, w in enumerate(self.vars)}
            out[v] = LinearExpr(coeffs, self.update_offset[i])
        return out

    def apply(self, state: Dict[str, Fraction]) -> Dict[str, Fraction]:
        return {v: e.evaluate(state) for v, e in self.update.items()}


@dataclass(frozen=True)
class CanonicalLoop:
    vars: Tuple[str, ...]
    guard: Pap
    branches: Tuple[Branch, ...]
    mode: str = INT

    def __post_init__(self):
        if not self.branches:
            raise ValueError("a canonical loop needs at least one branch")


def _identity(vars_: Sequence[str]) -> Update:
    return {v: LinearExpr.var(v) for v in vars_}


def make_branch(cond: Sequence[Constraint], update: Update, exit_: Exit, vars_: Sequence[str]) -> Branch:
    vars_ = tuple(vars_)
    rows = []
    offset = []
    for v in vars_:
        e = update.get(v, LinearExpr.var(v))
        rows.append([e.coeff(w) for w in vars_])
        offset.append(e.constant)
    return Branch(tuple(cond), Matrix.from_rows(rows, len(vars_)), tuple(offset), exit_, vars_)


# intermediate form: (conditions, update, exit)
_Raw = Tuple[Tuple[Constraint, ...], Update, Exit]


def _feasible(cond: Sequence[Constraint], vars_: Sequence[str]) -> bool:
    return not is_empty(Polyhedron(tuple(vars_), tuple(cond)))


def _check_cap(bs: List[_Raw]) -> List[_Raw]:
    if len(bs) > BRANCH_CAP:
        raise BranchExplosionError(f"loop body expands to more than {BRANCH_CAP} branches")
    return bs


def _seq(first: List[_Raw], second: List[_Raw], vars_) -> List[_Raw]:
    out: List[_Raw] = []
    for c1, u1, x1 in first:
        if x1 is BREAK:
            out.append((c1, u1, x1))
            continue
        for c2, u2, x2 in second:
            c = c1 + tuple(k.substitute(u1).normalized() for k in c2)
            c = tuple(k for k in c if not k.is_trivial())
            if any(k.is_contradiction() for k in c) or not _feasible(c, vars_):
                continue
            u = {v: u2.get(v, LinearExpr.var(v)).substitute(u1) for v in vars_}
            out.append((c, u, x2))
    return _check_cap(out)


def _branches(stmts: Sequence[Stmt], vars_, mode) -> List[_Raw]:
    acc: List[_Raw] = [((), _identity(vars_), SKIP)]
    for s in stmts:
        acc = _seq(acc, _stmt(s, vars_, mode), vars_)
    return acc


def _stmt(s: Stmt, vars_, mode) -> List[_Raw]:
    if isinstance(s, Assign):
        u = _identity(vars_)
        for t, e in zip(s.targets, s.exprs):
            u[t] = e
        return [((), u, SKIP)]
    if isinstance(s, Break):
        return [((), _identity(vars_), BREAK)]
    if isinstance(s, If):
        then = _branches(s.then, vars_, mode)
        orelse = _branches(s.orelse, vars_, mode)
        if isinstance(s.cond, Nondet):
            return _check_cap(then + orelse)
        out: List[_Raw] = []
        for clause, part in ((to_dnf(s.cond, mode), then), (to_dnf(Not(s.cond), mode), orelse)):
            for cl in clause:
                for c, u, x in part:
                    cc = cl + c
                    if _feasible(cc, vars_):
                        out.append((cc, u, x))
        return _check_cap(out)
    if isinstance(s, While):
        raise NestedLoopError("loop body contains a nested loop")
    raise TypeError(s)


def canonicalize(body: Sequence[Stmt], vars_: Sequence[str], mode: str = INT) -> List[Branch]:
    """Top-level branches equivalent to ``body``; infeasible compositions are dropped."""
    if contains_loop(body):
        raise NestedLoopError("loop body contains a nested loop")
    vars_ = tuple(vars_)
    return [make_branch(c, u, x, vars_) for c, u, x in _branches(body, vars_, mode)]


def prune_branches(bs: Sequence[Branch], guard: Pap, mode: str = INT) -> List[Branch]:
    """Drop branches whose condition is incompatible with the loop guard."""
    gd = to_dnf(guard, mode)
    out = []
    for b in bs:
        if any(_feasible(g + b.cond, b.vars) for g in gd):
            out.append(b)
    return out


def canonical_loop(loop: While, vars_: Sequence[str], mode: str = INT) -> CanonicalLoop:
    bs = prune_branches(canonicalize(loop.body, vars_, mode), loop.guard, mode)
    if not bs:
        # the body can never run; keep one identity branch so the loop still has a head
        bs = [make_branch((), {}, SKIP, vars_)]
    return CanonicalLoop(tuple(vars_), loop.guard, tuple(bs), mode)


def from_program(p: Program) -> CanonicalLoop:
    return canonical_loop(p.top_loop, p.vars, p.mode)


def format_update(b: Branch) -> List[str]:
    out = []
    for v, e in b.update.items():
        if e != LinearExpr.var(v):
            out.append(f"{v}={format_expr(e, b.vars)}")
    return out


def format_canonical(loop: CanonicalLoop, style: str = "unicode") -> str:
    lines = [f"while({format_pap(loop.guard, loop.vars)}){{", "  switch{"]
    for b in loop.branches:
        cond = format_conjunction(b.cond, b.vars, style) if b.cond else "true"
        lines.append(f"    case {cond}:")
        ups = format_update(b)
        stmts = [u + ";" for u in ups]
        if b.exit is BREAK:
            stmts.append("break;")
        if not stmts:
            stmts = ["skip;"]
        for s in stmts:
            lines.append(f"      {s}")
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines)
