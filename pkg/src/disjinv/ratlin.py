"""Exact rational linear algebra.

Everything here works over :class:`fractions.Fraction`.  Matrices are small
(a few dozen rows at most), so a dense row-major representation is used.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Optional, Sequence

Rational = Fraction


def _bits(q: Fraction) -> int:
    return q.numerator.bit_length() + q.denominator.bit_length()


@dataclass(frozen=True)
class Matrix:
    """Dense rational matrix stored row-major."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows * cols")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: Optional[int] = None) -> "Matrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged rows")
        flat = tuple(Fraction(v) for r in rows for v in r)
        return cls(len(rows), cols, flat)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(rows, cols, tuple(Fraction(0) for _ in range(rows * cols)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def column(self, j: int) -> list:
        return [self.entries[i * self.cols + j] for i in range(self.rows)]

    def to_lists(self) -> list:
        return [self.row(i) for i in range(self.rows)]

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        out = []
        for i in range(self.rows):
            r = self.row(i)
            out.append([sum((r[k] * other[k, j] for k in range(self.cols)), Fraction(0))
                        for j in range(other.cols)])
        return Matrix.from_rows(out, other.cols)

    def apply(self, v: Sequence) -> list:
        """Matrix-vector product."""
        if len(v) != self.cols:
            raise ValueError("shape mismatch")
        return [sum((self[i, k] * v[k] for k in range(self.cols)), Fraction(0))
                for i in range(self.rows)]

    def is_identity(self) -> bool:
        return self.rows == self.cols and all(
            self[i, j] == (1 if i == j else 0) for i in range(self.rows) for j in range(self.cols))


@dataclass(frozen=True)
class SolutionSpace:
    """Affine solution set ``particular + span(kernel_basis)``; ``particular`` is None when inconsistent."""

    particular: Optional[tuple]
    kernel_basis: tuple

    @property
    def consistent(self) -> bool:
        return self.particular is not None


class SingularMatrixError(ArithmeticError):
    pass


@dataclass
class _Echelon:
    # reduced row echelon form of A, the row operations applied (E with E*A = R),
    # and the pivot column of each nonzero row
    reduced: list
    ops: list
    pivots: list


def _rref(rows: list, ncols: int) -> _Echelon:
    m = len(rows)
    a = [[Fraction(v) for v in r] for r in rows]
    e = [[Fraction(1 if i == j else 0) for j in range(m)] for i in range(m)]
    pivots = []
    r = 0
    for c in range(ncols):
        if r >= m:
            break
        best = None
        for i in range(r, m):
            if a[i][c] != 0 and (best is None or _bits(a[i][c]) < _bits(a[best][c])):
                best = i
        if best is None:
            continue
        a[r], a[best] = a[best], a[r]
        e[r], e[best] = e[best], e[r]
        p = a[r][c]
        if p != 1:
            a[r] = [v / p for v in a[r]]
            e[r] = [v / p for v in e[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                e[i] = [x - f * y for x, y in zip(e[i], e[r])]
        pivots.append(c)
        r += 1
    return _Echelon(a, e, pivots)


class IntegerEchelon:
    """Fraction-free row echelon basis over integer vectors, grown one row at a time."""

    def __init__(self):
        self.basis: list = []

    def reduce(self, row) -> list:
        r = list(row)
        for pc, b in self.basis:
            f = r[pc]
            if f:
                p = b[pc]
                r = [p * x - f * y for x, y in zip(r, b)]
                g = 0
                for x in r:
                    g = gcd(g, x)
                if g > 1:
                    r = [x // g for x in r]
        return r

    def add(self, row) -> bool:
        """Insert ``row``; False when it is already in the span."""
        r = self.reduce(row)
        for i, x in enumerate(r):
            if x:
                self.basis.append((i, r))
                return True
        return False

    def __len__(self):
        return len(self.basis)


def integer_rank(rows) -> int:
    ech = IntegerEchelon()
    for r in rows:
        ech.add(r)
    return len(ech)


def rank(A: Matrix) -> int:
    """Row rank over the rationals."""
    return len(_rref(A.to_lists(), A.cols).pivots)


def _kernel_from(ech: _Echelon, ncols: int) -> list:
    free = [c for c in range(ncols) if c not in ech.pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(ech.pivots):
            v[pc] = -ech.reduced[i][f]
        basis.append(tuple(v))
    return basis


def gaussian_solve(A: Matrix, b: Sequence) -> SolutionSpace:
    """Solve ``A u = b``; returns a particular solution (free variables zero) and a kernel basis."""
    if A.rows != len(b):
        raise ValueError("A.rows must equal len(b)")
    ech = _rref(A.to_lists(), A.cols)
    eb = [sum((ech.ops[i][k] * Fraction(b[k]) for k in range(A.rows)), Fraction(0))
          for i in range(A.rows)]
    kernel = tuple(_kernel_from(ech, A.cols))
    for i in range(len(ech.pivots), A.rows):
        if eb[i] != 0:
            return SolutionSpace(None, kernel)
    u = [Fraction(0)] * A.cols
    for i, pc in enumerate(ech.pivots):
        u[pc] = eb[i]
    return SolutionSpace(tuple(u), kernel)


def invert(A: Matrix) -> Matrix:
    """Inverse of a square matrix; raises SingularMatrixError when singular."""
    if A.rows != A.cols:
        raise ValueError("matrix must be square")
    ech = _rref(A.to_lists(), A.cols)
    if len(ech.pivots) < A.rows:
        raise SingularMatrixError("matrix is singular")
    return Matrix.from_rows(ech.ops, A.rows)


@dataclass(frozen=True)
class AffinePreimage:
    """Parametric solution of ``A x = y`` for symbolic ``y``.

    ``x = C y + sum(a_k * kernel[k])`` whenever ``consistency @ y = 0``.
    """

    particular_map: Matrix
    kernel_basis: tuple
    consistency: Matrix


def affine_preimage(A: Matrix) -> AffinePreimage:
    """Gaussian elimination of ``A x = y`` with ``y`` kept symbolic."""
    ech = _rref(A.to_lists(), A.cols)
    rk = len(ech.pivots)
    C = [[Fraction(0)] * A.rows for _ in range(A.cols)]
    for i, pc in enumerate(ech.pivots):
        C[pc] = list(ech.ops[i])
    cons = [list(ech.ops[i]) for i in range(rk, A.rows)]
    return AffinePreimage(Matrix.from_rows(C, A.rows),
                          tuple(_kernel_from(ech, A.cols)),
                          Matrix.from_rows(cons, A.rows))


def dot(u: Iterable, v: Iterable):
    return sum((x * y for x, y in zip(u, v)), Fraction(0))
