import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from disjinv.ratlin import (IntegerEchelon, Matrix, SingularMatrixError, affine_preimage, gaussian_solve,
                            integer_rank, invert, rank)


def M(rows):
    return Matrix.from_rows([[Fraction(x) for x in r] for r in rows])


def det(rows):
    """Leibniz expansion: an oracle that shares nothing with elimination."""
    n = len(rows)
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = Fraction(1)
        for i in range(n):
            term *= rows[i][perm[i]]
        total += -term if inv % 2 else term
    return total


def brute_rank(rows):
    """Largest k with a nonzero k-by-k minor."""
    m, n = len(rows), len(rows[0]) if rows else 0
    for k in range(min(m, n), 0, -1):
        for ri in itertools.combinations(range(m), k):
            for ci in itertools.combinations(range(n), k):
                if det([[rows[i][j] for j in ci] for i in ri]) != 0:
                    return k
    return 0


def test_solve_identity():
    s = gaussian_solve(M([[1, 0], [0, 1]]), [3, 5])
    assert s.consistent
    assert list(s.particular) == [3, 5]
    assert len(s.kernel_basis) == 0


def test_solve_underdetermined():
    s = gaussian_solve(M([[1, 1]]), [2])
    assert list(s.particular) == [2, 0]
    assert len(s.kernel_basis) == 1
    k = list(s.kernel_basis[0])
    assert k[0] == -k[1] != 0


def test_solve_inconsistent():
    assert not gaussian_solve(M([[1, 0], [1, 0]]), [1, 2]).consistent


def test_invert_examples():
    assert invert(Matrix.identity(3)) == Matrix.identity(3)
    assert invert(M([[1, 1], [0, 1]])) == M([[1, -1], [0, 1]])
    with pytest.raises(SingularMatrixError):
        invert(M([[1, 1], [1, 1]]))


def test_rank_examples():
    assert rank(Matrix.zeros(2, 2)) == 0
    assert rank(Matrix.identity(4)) == 4
    assert rank(M([[1, 2], [2, 4]])) == 1


small = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=1, max_size=3)))
def test_rank_matches_minors(rows):
    rows = [[Fraction(x) for x in r] for r in rows]
    assert rank(Matrix.from_rows(rows, len(rows[0]))) == brute_rank(rows)
    assert integer_rank([[int(x) for x in r] for r in rows]) == brute_rank(rows)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)))
def test_invert_is_inverse(rows):
    A = M(rows)
    if det([[Fraction(x) for x in r] for r in rows]) == 0:
        with pytest.raises(SingularMatrixError):
            invert(A)
        return
    B = invert(A)
    n = len(rows)
    for i in range(n):
        for j in range(n):
            assert sum(A[i, k] * B[k, j] for k in range(n)) == (1 if i == j else 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.lists(st.lists(small, min_size=n, max_size=n), min_size=1, max_size=3),
    st.lists(small, min_size=3, max_size=3))))
def test_solution_space_is_exact(data):
    rows, b = data
    A = M(rows)
    b = [Fraction(x) for x in b[:len(rows)]]
    s = gaussian_solve(A, b)
    if not s.consistent:
        # then some integer combination of rows is 0 = nonzero; check by rank augmentation
        aug = [list(r) + [bb] for r, bb in zip(A.to_lists(), b)]
        assert brute_rank(aug) > brute_rank(A.to_lists())
        return
    assert A.apply(s.particular) == b
    for k in s.kernel_basis:
        assert all(x == 0 for x in A.apply(k))
    assert len(s.kernel_basis) == A.cols - brute_rank(A.to_lists())


def test_affine_preimage_of_projection():
    # x' = 0 (singular): preimage of any x' is parametric in x
    pre = affine_preimage(M([[0]]))
    assert len(pre.kernel_basis) == 1


def test_integer_echelon_add_reports_independence():
    e = IntegerEchelon()
    assert e.add([2, 4, 0])
    assert not e.add([1, 2, 0])
    assert e.add([0, 0, 3])
    assert len(e) == 2
    assert all(x == 0 for x in e.reduce([4, 8, 6]))
