"""A small C-like DSL for affine while loops.

Grammar (file extension ``.afl``)::

    program := "vars" ident ("," ident)* ";" ("mode" ("int"|"rat") ";")? init* while
    init    := ident "=" expr ";" | "assume" "(" pap ")" ";"
    stmt    := ident "=" expr ";" | "if" "(" pap ")" block ("else" (block|if-stmt))?
             | "break" ";" | "while" "(" pap ")" block
    block   := "{" stmt* "}"

Conditions are boolean combinations (``&&``, ``||``, ``!``) of comparisons
between affine expressions, plus ``true``, ``false`` and ``nondet()``, which
may only appear as a whole ``if`` condition.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .polyhedra import EQ, GEQ, Constraint, LinearExpr

INT = "int"
RAT = "rat"


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class NonAffineError(ParseError):
    pass


class UndeclaredVariableError(ParseError):
    pass


# ---------------------------------------------------------------------------
# conditions
# ---------------------------------------------------------------------------

class Pap:
    """Base class of condition formulas."""


@dataclass(frozen=True)
class Cmp(Pap):
    lhs: LinearExpr
    op: str  # one of < <= > >= == !=
    rhs: LinearExpr


@dataclass(frozen=True)
class And(Pap):
    items: Tuple[Pap, ...]


@dataclass(frozen=True)
class Or(Pap):
    items: Tuple[Pap, ...]


@dataclass(frozen=True)
class Not(Pap):
    item: Pap


@dataclass(frozen=True)
class BoolConst(Pap):
    value: bool


@dataclass(frozen=True)
class Nondet(Pap):
    pass


TRUE = BoolConst(True)
FALSE = BoolConst(False)

DNF = List[Tuple[Constraint, ...]]


def _strict(e: LinearExpr, mode: str) -> Constraint:
    """``e > 0`` as a non-strict constraint."""
    if mode == INT:
        n = Constraint(e, GEQ).normalized()
        return Constraint(n.expr - 1, GEQ)
    return Constraint(e, GEQ)


def _atom_dnf(e: LinearExpr, op: str, mode: str) -> DNF:
    # e op 0
    if op == ">=":
        return [(Constraint(e, GEQ),)]
    if op == ">":
        return [(_strict(e, mode),)]
    if op == "<=":
        return [(Constraint(-e, GEQ),)]
    if op == "<":
        return [(_strict(-e, mode),)]
    if op == "==":
        return [(Constraint(e, EQ),)]
    if op == "!=":
        return [(_strict(e, mode),), (_strict(-e, mode),)]
    raise ValueError(op)


_NEG_OP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _clean(dnf: DNF) -> DNF:
    out = []
    seen = set()
    for clause in dnf:
        if any(c.is_contradiction() for c in clause):
            continue
        cl = []
        for c in clause:
            c = c.normalized() if not c.expr.is_constant() else c
            if c.is_trivial() or c in cl:
                continue
            cl.append(c)
        t = tuple(cl)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def to_dnf(p: Pap, mode: str = INT, negate: bool = False) -> DNF:
    """Disjunctive normal form; negations are pushed to atoms and strictness resolved per ``mode``."""
    if isinstance(p, BoolConst):
        return [()] if p.value != negate else []
    if isinstance(p, Nondet):
        return [()]
    if isinstance(p, Not):
        return to_dnf(p.item, mode, not negate)
    if isinstance(p, Cmp):
        op = _NEG_OP[p.op] if negate else p.op
        return _clean(_atom_dnf(p.lhs - p.rhs, op, mode))
    if isinstance(p, (And, Or)):
        conj = isinstance(p, And) != negate
        parts = [to_dnf(q, mode, negate) for q in p.items]
        if not conj:
            return _clean([c for part in parts for c in part])
        acc: DNF = [()]
        for part in parts:
            acc = _clean([a + b for a in acc for b in part])
            if not acc:
                break
        return acc
    raise TypeError(f"not a condition: {p!r}")


# ---------------------------------------------------------------------------
# statements and programs
# ---------------------------------------------------------------------------

class Stmt:
    pass


@dataclass(frozen=True)
class Assign(Stmt):
    targets: Tuple[str, ...]
    exprs: Tuple[LinearExpr, ...]

    def __post_init__(self):
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("assignment targets must be distinct")
        if len(self.targets) != len(self.exprs):
            raise ValueError("targets and expressions differ in length")


@dataclass(frozen=True)
class If(Stmt):
    cond: Pap
    then: Tuple[Stmt, ...]
    orelse: Tuple[Stmt, ...] = ()


@dataclass(frozen=True)
class Break(Stmt):
    pass


@dataclass(frozen=True)
class While(Stmt):
    guard: Pap
    body: Tuple[Stmt, ...]


@dataclass(frozen=True)
class InitAssign:
    target: str
    expr: LinearExpr


@dataclass(frozen=True)
class Assume:
    cond: Pap


@dataclass(frozen=True)
class Program:
    vars: Tuple[str, ...]
    init_items: Tuple[Union[InitAssign, Assume], ...]
    top_loop: While
    mode: str = INT

    @property
    def init_pap(self) -> Pap:
        parts: List[Pap] = []
        for it in self.init_items:
            if isinstance(it, InitAssign):
                parts.append(Cmp(LinearExpr.var(it.target), "==", it.expr))
            else:
                parts.append(it.cond)
        return And(tuple(parts)) if parts else TRUE

    @property
    def init(self) -> DNF:
        """Initial condition in DNF."""
        return to_dnf(self.init_pap, self.mode)


def contains_loop(stmts: Sequence[Stmt]) -> bool:
    for s in stmts:
        if isinstance(s, While):
            return True
        if isinstance(s, If) and (contains_loop(s.then) or contains_loop(s.orelse)):
            return True
    return False


# ---------------------------------------------------------------------------
# lexer and parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|//[^\n]*|/\*.*?\*/) |
    (?P<nl>\n) |
    (?P<num>\d+) |
    (?P<id>[A-Za-z_][A-Za-z_0-9]*) |
    (?P<op>&&|\|\||<=|>=|==|!=|[-+*/()<>!{};,=])
""", re.VERBOSE | re.DOTALL)

KEYWORDS = {"vars", "mode", "assume", "if", "else", "while", "break", "true", "false", "nondet"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    line, col0 = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            col0 = m.end()
        elif kind == "ws":
            nls = s.count("\n")
            if nls:
                line += nls
                col0 = pos + s.rfind("\n") + 1
        else:
            toks.append(_Tok(kind, s, line, pos - col0 + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - col0 + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0
        self.vars: Tuple[str, ...] = ()

    # token helpers
    def peek(self, k: int = 0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("op", "id") and t.text == text

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def error(self, msg: str, tok: Optional[_Tok] = None, cls=ParseError):
        t = tok or self.peek()
        return cls(msg, t.line, t.col)

    def ident(self) -> _Tok:
        t = self.peek()
        if t.kind != "id" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        return self.next()

    def var(self) -> str:
        t = self.ident()
        if t.text not in self.vars:
            raise self.error(f"undeclared variable {t.text!r}", t, UndeclaredVariableError)
        return t.text

    # program
    def program(self) -> Program:
        self.expect("vars")
        names = [self.ident().text]
        while self.at(","):
            self.next()
            names.append(self.ident().text)
        self.expect(";")
        if len(set(names)) != len(names):
            raise self.error("duplicate variable declaration")
        self.vars = tuple(names)
        mode = INT
        if self.at("mode"):
            self.next()
            t = self.ident()
            if t.text not in (INT, RAT):
                raise self.error(f"unknown mode {t.text!r}", t)
            mode = t.text
            self.expect(";")
        items: List[Union[InitAssign, Assume]] = []
        read: set = set()
        assigned: set = set()
        while not self.at("while"):
            if self.at("assume"):
                self.next()
                self.expect("(")
                c = self.pap()
                self.expect(")")
                self.expect(";")
                items.append(Assume(c))
            else:
                tok = self.peek()
                v = self.var()
                self.expect("=")
                e = self.expr()
                self.expect(";")
                if v in read or v in assigned:
                    raise self.error(f"initialization overwrites {v!r} after it was used", tok)
                read |= set(e.coeffs)
                assigned.add(v)
                items.append(InitAssign(v, e))
        loop = self.stmt()
        t = self.peek()
        if t.kind != "eof":
            raise self.error(f"unexpected {t.text!r} after the loop")
        return Program(self.vars, tuple(items), loop, mode)

    def block(self) -> Tuple[Stmt, ...]:
        self.expect("{")
        out = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                raise self.error("unterminated block")
            out.append(self.stmt())
        self.expect("}")
        return tuple(out)

    def stmt(self) -> Stmt:
        if self.at("while"):
            self.next()
            self.expect("(")
            g = self.pap()
            self.expect(")")
            return While(g, self.block())
        if self.at("if"):
            self.next()
            self.expect("(")
            if self.at("nondet"):
                self.next()
                self.expect("(")
                self.expect(")")
                c: Pap = Nondet()
            else:
                c = self.pap()
            self.expect(")")
            then = self.block()
            orelse: Tuple[Stmt, ...] = ()
            if self.at("else"):
                self.next()
                orelse = (self.stmt(),) if self.at("if") else self.block()
            return If(c, then, orelse)
        if self.at("break"):
            self.next()
            self.expect(";")
            return Break()
        v = self.var()
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return Assign((v,), (e,))

    # conditions
    def pap(self) -> Pap:
        items = [self.conj()]
        while self.at("||"):
            self.next()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self) -> Pap:
        items = [self.unary()]
        while self.at("&&"):
            self.next()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Pap:
        if self.at("!"):
            self.next()
            return Not(self.unary())
        if self.at("true"):
            self.next()
            return TRUE
        if self.at("false"):
            self.next()
            return FALSE
        if self.at("nondet"):
            raise self.error("nondet() may only be used as a whole if condition")
        if self.at("("):
            save = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = save
            self.next()
            p = self.pap()
            self.expect(")")
            return p
        return self.comparison()

    def comparison(self) -> Cmp:
        lhs = self.expr()
        t = self.peek()
        if not (t.kind == "op" and t.text in ("<", "<=", ">", ">=", "==", "!=")):
            raise self.error("expected a comparison operator")
        self.next()
        rhs = self.expr()
        return Cmp(lhs, t.text, rhs)

    # affine expressions
    def expr(self) -> LinearExpr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.next().text
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> LinearExpr:
        e = self.factor()
        while self.at("*") or self.at("/"):
            optok = self.next()
            f = self.factor()
            if optok.text == "*":
                if e.is_constant():
                    e = f.scale(e.constant)
                elif f.is_constant():
                    e = e.scale(f.constant)
                else:
                    raise self.error("product of two non-constant expressions", optok, NonAffineError)
            else:
                if not f.is_constant():
                    raise self.error("division by a non-constant expression", optok, NonAffineError)
                if f.constant == 0:
                    raise self.error("division by zero", optok)
                e = e.scale(Fraction(1) / f.constant)
        return e

    def factor(self) -> LinearExpr:
        t = self.peek()
        if self.at("-"):
            self.next()
            return -self.factor()
        if self.at("+"):
            self.next()
            return self.factor()
        if t.kind == "num":
            self.next()
            return LinearExpr.const(int(t.text))
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        return LinearExpr.var(self.var())


def parse(text: str) -> Program:
    return _Parser(text).program()


def parse_pap(text: str, vars_: Sequence[str]) -> Pap:
    p = _Parser(text)
    p.vars = tuple(vars_)
    out = p.pap()
    if p.peek().kind != "eof":
        raise p.error(f"unexpected {p.peek().text!r}")
    return out


def parse_expr(text: str, vars_: Sequence[str]) -> LinearExpr:
    p = _Parser(text)
    p.vars = tuple(vars_)
    out = p.expr()
    if p.peek().kind != "eof":
        raise p.error(f"unexpected {p.peek().text!r}")
    return out


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

def _dsl_num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_dsl_expr(e: LinearExpr, order: Sequence[str] = ()) -> str:
    names = [v for v in order if v in e.coeffs] + sorted(v for v in e.coeffs if v not in order)
    parts = []
    for v in names:
        a = e.coeffs[v]
        mag = abs(a)
        body = v if mag == 1 else f"{_dsl_num(mag)}*{v}"
        parts.append(("-" if a < 0 else "+", body))
    if e.constant or not parts:
        parts.append(("-" if e.constant < 0 else "+", _dsl_num(abs(e.constant))))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, b in parts[1:]:
        out += s + b
    return out


def format_pap(p: Pap, order: Sequence[str] = ()) -> str:
    if isinstance(p, BoolConst):
        return "true" if p.value else "false"
    if isinstance(p, Nondet):
        return "nondet()"
    if isinstance(p, Cmp):
        return f"{format_dsl_expr(p.lhs, order)} {p.op} {format_dsl_expr(p.rhs, order)}"
    if isinstance(p, Not):
        return f"!({format_pap(p.item, order)})"
    if isinstance(p, And):
        return " && ".join(f"({format_pap(q, order)})" for q in p.items)
    if isinstance(p, Or):
        return " || ".join(f"({format_pap(q, order)})" for q in p.items)
    raise TypeError(p)


def _format_stmts(stmts: Sequence[Stmt], order, indent: int) -> List[str]:
    pad = "  " * indent
    out = []
    for s in stmts:
        if isinstance(s, Assign):
            for t, e in zip(s.targets, s.exprs):
                out.append(f"{pad}{t} = {format_dsl_expr(e, order)};")
        elif isinstance(s, Break):
            out.append(f"{pad}break;")
        elif isinstance(s, If):
            out.append(f"{pad}if ({format_pap(s.cond, order)}) {{")
            out += _format_stmts(s.then, order, indent + 1)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                out += _format_stmts(s.orelse, order, indent + 1)
            out.append(f"{pad}}}")
        elif isinstance(s, While):
            out.append(f"{pad}while ({format_pap(s.guard, order)}) {{")
            out += _format_stmts(s.body, order, indent + 1)
            out.append(f"{pad}}}")
        else:
            raise TypeError(s)
    return out


def format_program(p: Program) -> str:
    lines = [f"vars {', '.join(p.vars)};", f"mode {p.mode};"]
    for it in p.init_items:
        if isinstance(it, InitAssign):
            lines.append(f"{it.target} = {format_dsl_expr(it.expr, p.vars)};")
        else:
            lines.append(f"assume({format_pap(it.cond, p.vars)});")
    lines += _format_stmts([p.top_loop], p.vars, 0)
    return "\n".join(lines) + "\n"
