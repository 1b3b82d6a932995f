"""Bounded concrete execution, used to falsify invariants and summaries.

States are explored exhaustively from every initial state in an integer
box.  Constraints are evaluated directly on points; nothing here relies on
the polyhedral machinery.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .loop_ir import (And, Assign, BoolConst, Break, Cmp, If, InitAssign, Nondet, Not, Or, Pap,
                      Program, Stmt, While)

CONFIG_CAP = 10 ** 6
HEAD = "head"
EXIT = "exit"

State = Tuple[Fraction, ...]
Box = Dict[str, Tuple[int, int]]


class ExplosionError(RuntimeError):
    pass


def _num(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"Fraction({q.numerator}, {q.denominator})"


def _expr_src(e, index: Mapping[str, int]) -> str:
    terms = [f"{_num(c)}*s[{index[v]}]" for v, c in sorted(e.coeffs.items()) if c]
    return "(" + " + ".join(terms + [_num(e.constant)]) + ")"


_OPS = {"<": "<", "<=": "<=", ">": ">", ">=": ">=", "==": "==", "!=": "!="}


def _pap_src(p: Pap, index) -> str:
    if isinstance(p, Cmp):
        return f"({_expr_src(p.lhs, index)} {_OPS[p.op]} {_expr_src(p.rhs, index)})"
    if isinstance(p, And):
        return "(" + " and ".join([_pap_src(q, index) for q in p.items] or ["True"]) + ")"
    if isinstance(p, Or):
        return "(" + " or ".join([_pap_src(q, index) for q in p.items] or ["False"]) + ")"
    if isinstance(p, Not):
        return f"(not {_pap_src(p.item, index)})"
    if isinstance(p, BoolConst):
        return repr(p.value)
    raise TypeError(f"cannot evaluate {p!r}")


def _lambda(body: str):
    return eval("lambda s: " + body, {"Fraction": Fraction})


def compile_pap(p: Pap, vars_: Sequence[str]):
    """A predicate on state tuples ordered as ``vars_``."""
    return _lambda(_pap_src(p, {v: i for i, v in enumerate(vars_)}))


def compile_constraints(constraints: Iterable, vars_: Sequence[str]):
    """A predicate for the conjunction of ``expr >= 0`` / ``expr == 0`` rows."""
    index = {v: i for i, v in enumerate(vars_)}
    parts = [f"{_expr_src(c.expr, index)} {'==' if c.is_eq else '>='} 0" for c in constraints]
    return _lambda(" and ".join(parts) or "True")


def compile_dnf(polys: Iterable, vars_: Sequence[str]):
    preds = [compile_constraints(p.constraints, vars_) for p in polys]
    return lambda s: any(f(s) for f in preds)


def _env(vars_, s) -> Dict[str, Fraction]:
    return {v: Fraction(x) for v, x in zip(vars_, s)}


@dataclass
class Reach:
    vars: Tuple[str, ...]
    configs: Set[Tuple[str, State]] = field(default_factory=set)
    # (state on loop entry, state on loop exit)
    runs: Set[Tuple[State, State]] = field(default_factory=set)
    truncated: int = 0
    work: int = 0

    def states(self, label: str) -> List[Dict[str, Fraction]]:
        return [dict(zip(self.vars, s)) for l, s in sorted(self.configs) if l == label]


class _Interp:
    """Statements compiled to closures from a state tuple to outcomes ``(state, broke)``."""

    def __init__(self, vars_: Sequence[str], step_cap: int, cap: int):
        self.vars = tuple(vars_)
        self.index = {v: i for i, v in enumerate(self.vars)}
        self.step_cap = step_cap
        self.cap = cap
        self.count = 0

    def bump(self, k: int = 1):
        self.count += k
        if self.count > self.cap:
            raise ExplosionError(f"more than {self.cap} configurations")

    def pred(self, p: Pap):
        return _lambda(_pap_src(p, self.index))

    def block(self, stmts: Sequence[Stmt]):
        fs = [self.stmt(s) for s in stmts]

        def run(s):
            cur = [(s, False)]
            for f in fs:
                nxt = []
                for st, broke in cur:
                    if broke:
                        nxt.append((st, True))
                    else:
                        nxt.extend(f(st))
                cur = nxt
            return cur
        return run

    def stmt(self, s: Stmt):
        if isinstance(s, Assign):
            vals = {self.index[t]: _expr_src(e, self.index) for t, e in zip(s.targets, s.exprs)}
            cells = [vals.get(i, f"s[{i}]") for i in range(len(self.vars))]
            upd = _lambda("(" + ", ".join(cells) + ",)")
            return lambda st: [(upd(st), False)]
        if isinstance(s, Break):
            return lambda st: [(st, True)]
        if isinstance(s, If):
            then, orelse = self.block(s.then), self.block(s.orelse)
            if isinstance(s.cond, Nondet):
                return lambda st: then(st) + orelse(st)
            c = self.pred(s.cond)
            return lambda st: then(st) if c(st) else orelse(st)
        if isinstance(s, While):
            return self.inner(s)
        raise TypeError(s)

    def inner(self, w: While):
        guard, body = self.pred(w.guard), self.block(w.body)

        def run(st):
            out = []
            front = [st]
            for _ in range(self.step_cap + 1):
                nxt = set()
                for s in front:
                    if not guard(s):
                        out.append((s, False))
                        continue
                    for s2, broke in body(s):
                        if broke:
                            out.append((s2, False))
                        else:
                            nxt.add(s2)
                self.bump(len(nxt))
                front = nxt
                if not front:
                    break
            return out
        return run


def execute(stmts: Sequence[Stmt], vars_: Sequence[str], state: State, step_cap: int = 500,
            cap: int = CONFIG_CAP) -> List[Tuple[State, bool]]:
    """Every outcome ``(state, broke)`` of running ``stmts`` once from ``state``."""
    return _Interp(vars_, step_cap, cap).block(stmts)(tuple(state))


def _pap_vars(p: Pap) -> Set[str]:
    if isinstance(p, Cmp):
        return set(p.lhs.coeffs) | set(p.rhs.coeffs)
    if isinstance(p, (And, Or)):
        return set().union(*(_pap_vars(q) for q in p.items))
    if isinstance(p, Not):
        return _pap_vars(p.item)
    return set()


DEFAULT_RANGE = (-10, 110)


def free_vars(p: Program) -> List[str]:
    """Variables whose initial value is not fixed by an assignment before being read."""
    fixed, read = set(), set()
    for it in p.init_items:
        if isinstance(it, InitAssign):
            read |= set(it.expr.coeffs)
            if it.target not in read:
                fixed.add(it.target)
        else:
            read |= _pap_vars(it.cond)
    return [v for v in p.vars if v not in fixed]


def initial_states(p: Program, box: Box) -> List[State]:
    """States after the initialization prefix, starting from every point of ``box``.

    Only the free variables are enumerated; the others start at 0 and are overwritten.
    """
    X = tuple(p.vars)
    index = {v: i for i, v in enumerate(X)}
    free = free_vars(p)
    steps = []
    for it in p.init_items:
        if isinstance(it, InitAssign):
            steps.append((index[it.target], _lambda(_expr_src(it.expr, index))))
        else:
            steps.append((None, _lambda(_pap_src(it.cond, index))))
    ranges = [range(box.get(v, DEFAULT_RANGE)[0], box.get(v, DEFAULT_RANGE)[1] + 1) for v in free]
    pos = [index[v] for v in free]
    out = []
    for pt in itertools.product(*ranges):
        s = [0] * len(X)
        for i, x in zip(pos, pt):
            s[i] = x
        ok = True
        for i, f in steps:
            if i is None:
                if not f(s):
                    ok = False
                    break
            else:
                s[i] = f(s)
        if ok:
            out.append(tuple(s))
    return out


def enumerate_reachable(p: Program, init_box: Optional[Box] = None, step_cap: int = 500,
                        cap: int = CONFIG_CAP) -> Reach:
    """Loop-head and exit configurations within ``step_cap`` iterations of the top loop.

    Variables missing from ``init_box`` range over -10..110.
    """
    return _explore(p, initial_states(p, init_box or {}), step_cap, cap)


def _explore(p: Program, starts: Iterable[State], step_cap: int, cap: int) -> Reach:
    if step_cap < 1:
        raise ValueError("step_cap must be at least 1")
    it = _Interp(p.vars, step_cap, cap)
    X = tuple(p.vars)
    reach = Reach(X)
    guard, body = it.pred(p.top_loop.guard), it.block(p.top_loop.body)
    for s0 in starts:
        front = {s0}
        for k in range(step_cap + 1):
            nxt = set()
            for s in front:
                if not guard(s):
                    reach.configs.add((EXIT, s))
                    reach.runs.add((s0, s))
                    continue
                reach.configs.add((HEAD, s))
                if k == step_cap:
                    reach.truncated += 1
                    continue
                for s2, broke in body(s):
                    if broke:
                        reach.configs.add((EXIT, s2))
                        reach.runs.add((s0, s2))
                    else:
                        nxt.add(s2)
            it.bump(len(nxt))
            front = nxt
            if not front:
                break
    reach.work = it.count
    return reach


@dataclass
class Verdict:
    ok: bool
    location: Optional[str] = None
    state: Optional[Dict[str, Fraction]] = None
    checked: int = 0

    def __bool__(self):
        return self.ok


def check_invariant(reach: Reach, aam, ats) -> Verdict:
    """Every head state lies in the union of the invariants of the locations whose entry
    condition it meets; every exit state lies in the exit invariant."""
    X = reach.vars
    locs = list(ats.branch_locations)
    cond = {l: compile_dnf(ats.condition(l), X) for l in locs}
    inv = {l: compile_dnf(aam.get(l, ()), X) for l in locs + [ats.exit]}
    n = 0
    for label, s in sorted(reach.configs):
        n += 1
        if label == EXIT:
            if not inv[ats.exit](s):
                return Verdict(False, str(ats.exit), _env(X, s), n)
            continue
        here = [l for l in locs if cond[l](s)]
        if not here:
            return Verdict(False, "no location", _env(X, s), n)
        if not any(inv[l](s) for l in here):
            return Verdict(False, "/".join(str(l) for l in here), _env(X, s), n)
    return Verdict(True, checked=n)


def check_summary(reach: Reach, summary) -> Verdict:
    """Every observed (entry, exit) pair satisfies the summary relation."""
    order = tuple(summary.inputs) + tuple(reach.vars)
    rel = compile_dnf(summary.relation, order)
    n = 0
    for s0, s1 in sorted(reach.runs):
        n += 1
        if not rel(s0 + s1):
            return Verdict(False, "summary", _env(order, s0 + s1), n)
    return Verdict(True, checked=n)


def scaled_range(k: int, base: Tuple[int, int] = DEFAULT_RANGE) -> Tuple[int, int]:
    """``k`` consecutive integers placed inside ``base`` in the same proportion around 0."""
    lo, hi = base
    if k >= hi - lo + 1:
        return base
    left = round(-lo * (k - 1) / (hi - lo))
    return -left, k - 1 - left


SAMPLE_STARTS = 64


def auto_box(p: Program, step_cap: int = 500, cap: int = CONFIG_CAP) -> Box:
    """The widest box of free-variable ranges expected to stay well below ``cap``.

    The cost per initial state is estimated from a spread sample of the default box.
    """
    free = free_vars(p)
    if not free:
        return {}
    lo, hi = DEFAULT_RANGE
    m = 2
    while (m + 1) ** len(free) <= SAMPLE_STARTS:
        m += 1
    grid = {v: [lo + (hi - lo) * j // (m - 1) for j in range(m)] for v in free}
    seeds = [s for pt in itertools.product(*grid.values())
             for s in initial_states(p, {v: (x, x) for v, x in zip(free, pt)})]
    # with no admissible seed, assume every point is admitted and cheap; the retry loop corrects this
    share = len(seeds) / m ** len(free) if seeds else 1.0
    per = max(1.0, _explore(p, seeds, step_cap, cap).work / len(seeds)) if seeds else 1.0
    k = DEFAULT_RANGE[1] - DEFAULT_RANGE[0] + 1
    while k > 2 and (k ** len(free)) * max(share, 1e-9) * per > cap / 4:
        k -= 1
    return {v: scaled_range(k) for v in free}


def enumerate_auto(p: Program, step_cap: int = 500, cap: int = CONFIG_CAP) -> Tuple[Reach, Box]:
    """``enumerate_reachable`` on an automatically sized box, shrinking it if the cap is still hit."""
    box = auto_box(p, step_cap, cap)
    while True:
        try:
            return enumerate_reachable(p, box, step_cap, cap), box
        except ExplosionError:
            widths = [hi - lo + 1 for lo, hi in box.values()]
            if not widths or max(widths) <= 2:
                raise
            box = {v: scaled_range(max(2, (hi - lo + 1) * 2 // 3)) for v, (lo, hi) in box.items()}


def parse_box(text: str) -> Box:
    """``x=0..60,y=-5..5``."""
    out: Box = {}
    for part in filter(None, (t.strip() for t in text.split(","))):
        name, _, rng = part.partition("=")
        lo, sep, hi = rng.partition("..")
        if not name or not sep:
            raise ValueError(f"bad box entry {part!r}; expected name=lo..hi")
        lo_i, hi_i = int(lo), int(hi)
        if lo_i > hi_i:
            raise ValueError(f"empty range for {name.strip()}")
        out[name.strip()] = (lo_i, hi_i)
    return out
