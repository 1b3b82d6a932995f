"""Loop summaries: input/output relations of terminating loop runs.

Every variable gets a frozen input copy equal to its value on loop entry.
The exit invariant of the instrumented system, read over the input copies
and the final values, is the summary.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .ats import Ats, InitPart, Transition, build_ats, prime
from .canonical import canonical_loop
from .farkas import AssertionMap
from .loop_ir import DNF, INT, Program, While, contains_loop
from .polyhedra import (EQ, Constraint, LinearExpr, Polyhedron, format_dnf, is_empty, remove_redundant,
                        simplify_dnf)
from .propagate import AnalysisOptions, analyze
from .ratlin import Matrix

UNIVERSE: DNF = [()]


def input_names(vars_: Sequence[str]) -> Dict[str, str]:
    """``x -> x0``, avoiding clashes with existing variable names."""
    taken = set(vars_)
    out = {}
    for v in vars_:
        name = v + "0"
        while name in taken:
            name += "_in"
        taken.add(name)
        out[v] = name
    return out


@dataclass(frozen=True)
class Summary:
    """Relation over ``inputs`` (entry values) and ``outputs`` (exit values, named as the program variables)."""

    outputs: Tuple[str, ...]
    inputs: Tuple[str, ...]
    relation: Tuple[Polyhedron, ...]

    @property
    def vars(self) -> Tuple[str, ...]:
        return self.inputs + self.outputs

    def instantiate(self, actual: Sequence[LinearExpr], results: Sequence[str]) -> DNF:
        """The relation with inputs replaced by ``actual`` and outputs by the variables ``results``."""
        sub = {i: a for i, a in zip(self.inputs, actual)}
        sub.update({o: LinearExpr.var(r) for o, r in zip(self.outputs, results)})
        out: DNF = []
        for p in self.relation:
            cs = [c.substitute(sub).normalized() for c in p.constraints]
            if any(c.is_contradiction() for c in cs):
                continue
            out.append(tuple(c for c in cs if not c.is_trivial()))
        return out

    def holds(self, before: Mapping[str, Fraction], after: Mapping[str, Fraction]) -> bool:
        pt = {i: before[o] for i, o in zip(self.inputs, self.outputs)}
        pt.update({o: after[o] for o in self.outputs})
        return any(p.contains_point(pt) for p in self.relation)

    def format(self, style: str = "unicode") -> str:
        order = self.outputs + self.inputs
        return format_dnf(list(self.relation), order, style)


# ---------------------------------------------------------------------------
# instrumentation
# ---------------------------------------------------------------------------

def instrument_inputs(ats: Ats, names: Optional[Dict[str, str]] = None) -> Tuple[Ats, Dict[str, str]]:
    """Add frozen input copies: ``x_in' = x_in`` on every transition, ``x = x_in`` initially."""
    X = ats.vars
    names = names or input_names(X)
    XI = tuple(names[v] for v in X)
    nv = X + XI
    allv = nv + tuple(prime(v) for v in nv)
    freeze = tuple(Constraint(LinearExpr.var(prime(w)) - LinearExpr.var(w), EQ) for w in XI)
    start = tuple(Constraint(LinearExpr.var(v) - LinearExpr.var(names[v]), EQ) for v in X)
    n = len(X)
    trans = []
    for t in ats.transitions:
        upd = None
        if t.update is not None:
            A, b = t.update
            rows = [[A[i, j] for j in range(n)] + [Fraction(0)] * n for i in range(n)]
            rows += [[Fraction(0)] * n + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
            upd = (Matrix.from_rows(rows, 2 * n), tuple(b) + (Fraction(0),) * n)
        g = Polyhedron(allv, tuple(t.guard.constraints) + freeze)
        trans.append(Transition(t.src, t.dst, g, upd, t.label))
    parts = []
    for p in ats.init_parts:
        q = Polyhedron(nv, tuple(p.theta.constraints) + start)
        if not is_empty(q):
            parts.append(InitPart(p.loc, remove_redundant(q)))
    never = tuple(remove_redundant(Polyhedron(nv, tuple(p.constraints) + start)) for p in ats.theta_exit)
    conds = tuple((l, tuple(c.with_vars(nv) for c in cs)) for l, cs in ats.loc_conditions)
    return Ats(nv, ats.locations, tuple(trans), tuple(parts), never, conds, ats.mode), names


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def loop_ats(loop: While, vars_: Sequence[str], mode: str = INT, theta: DNF = UNIVERSE,
             options: Optional[AnalysisOptions] = None) -> Ats:
    """The transition system of ``loop``; inner loops are summarized first, innermost first."""
    vars_ = tuple(vars_)
    if not contains_loop(loop.body):
        return build_ats(canonical_loop(loop, vars_, mode), theta)
    from .ats_nested import build_cfg, build_nested_ats

    cfg = build_cfg(loop)
    inner = {nid: summarize(w, vars_, mode, UNIVERSE, options) for nid, w in cfg.inner_loops().items()}
    return build_nested_ats(loop, inner, theta, vars_=vars_, mode=mode, cfg=cfg)


def summarize(loop: While, vars_: Sequence[str], mode: str = INT, theta: DNF = UNIVERSE,
              options: Optional[AnalysisOptions] = None) -> Summary:
    return summarize_with_map(loop_ats(loop, vars_, mode, theta, options), options)[0]


def summarize_with_map(ats: Ats, options: Optional[AnalysisOptions] = None) -> Tuple[Summary, Ats, AssertionMap]:
    """The summary of ``ats`` plus the instrumented system and its assertion map."""
    inst, names = instrument_inputs(ats)
    aam, _ = analyze(inst, options)
    rel = simplify_dnf([remove_redundant(p) for p in aam[inst.exit]])
    return Summary(tuple(ats.vars), tuple(names[v] for v in ats.vars), tuple(rel)), inst, aam


def summarize_program(p: Program, options: Optional[AnalysisOptions] = None) -> Summary:
    """Summary of the top loop; fixed initializations and assumptions narrow the inputs."""
    return summarize(p.top_loop, p.vars, p.mode, p.init, options)
