import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bundlecoh.linalg import (
    INTEGER,
    LinalgError,
    Matrix,
    cohomology_step,
    format_scalar,
    image_basis,
    kernel_basis,
    parse_scalar,
    rank,
    rref,
    smith_normal_form,
    solve,
    solve_vector,
)
from oracles import bareiss_rank, dense_rank, det, matmul

small_ints = st.integers(min_value=-4, max_value=4)


def int_matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(small_ints, min_size=c, max_size=c), min_size=r, max_size=r)))


def test_rank_trivial_cases():
    assert rank(Matrix.zeros(3, 3)) == 0
    for n in range(5):
        assert rank(Matrix.identity(n)) == n


def test_kernel_of_row_of_ones():
    k = kernel_basis(Matrix.from_rows([[1, 1]]))
    assert k.cols == 1
    v = [k[0, 0], k[1, 0]]
    assert v[0] == -v[1] != 0


def test_kernel_matches_small_grid_search():
    # every rational vector with entries in {-2..2} killed by M lies in the span
    M = Matrix.from_rows([[1, 2, 3], [2, 4, 6]])
    K = kernel_basis(M)
    assert K.cols == 2
    for a in range(-2, 3):
        for b in range(-2, 3):
            for c in range(-2, 3):
                if a + 2 * b + 3 * c == 0:
                    sol = solve(K, Matrix.from_rows([[a], [b], [c]]))
                    assert sol is not None


def test_rank_agrees_with_bareiss_on_random_6x6():
    rng = random.Random(7)
    for _ in range(200):
        r = rng.randint(1, 6)
        rows = [[rng.randint(-3, 3) for _ in range(6)] for _ in range(6)]
        # force some rank deficiency
        for i in range(r, 6):
            rows[i] = [sum(rng.randint(-1, 1) * rows[k][j] for k in range(r)) for j in range(6)]
        assert rank(Matrix.from_rows(rows)) == bareiss_rank(rows)


@given(int_matrices())
def test_rank_nullity(rows):
    M = Matrix.from_rows(rows)
    K = kernel_basis(M)
    assert rank(M) + K.cols == M.cols
    assert (M @ K).is_zero()
    assert rank(M) == dense_rank(rows)


@given(int_matrices())
def test_image_basis_spans_columns(rows):
    M = Matrix.from_rows(rows)
    im = image_basis(M)
    assert im.cols == rank(M)
    assert solve(im, M) is not None


@given(int_matrices(), st.lists(small_ints, min_size=5, max_size=5))
def test_solve_contract(rows, b):
    M = Matrix.from_rows(rows)
    rhs = Matrix.from_rows([[v] for v in b[:M.rows]])
    x = solve(M, rhs)
    augmented = [r + [v] for r, v in zip(rows, b)]
    if x is None:
        assert dense_rank(augmented) > dense_rank(rows)
    else:
        assert M @ x == rhs


def test_solve_vector_inconsistent():
    M = Matrix.from_rows([[1, 0], [1, 0]])
    assert solve_vector(M, [1, 2]) is None
    assert solve_vector(M, [3, 3])[0] == 3


def test_rref_is_idempotent():
    M = Matrix.from_rows([[2, 4, 1], [1, 2, 0], [0, 0, 5]])
    R = rref(M)
    assert rref(R) == R
    assert rank(R) == rank(M)


def test_dimension_mismatch_raises():
    with pytest.raises(Exception):
        Matrix.identity(2) @ Matrix.identity(3)


def test_snf_examples():
    f = smith_normal_form(Matrix.from_rows([[2, 0], [0, 3]], ring=INTEGER))
    assert f.D == Matrix.from_rows([[1, 0], [0, 6]], ring=INTEGER)
    z = smith_normal_form(Matrix.zeros(2, 3, INTEGER))
    assert z.D.is_zero()
    i = smith_normal_form(Matrix.identity(3, INTEGER))
    assert i.D == Matrix.identity(3, INTEGER)


@given(int_matrices(4, 4))
def test_snf_properties(rows):
    M = Matrix.from_rows(rows, ring=INTEGER)
    f = smith_normal_form(M)
    assert f.U @ M @ f.V == f.D
    assert abs(det(f.U.to_rows())) == 1
    assert abs(det(f.V.to_rows())) == 1
    D = f.D.to_rows()
    assert all(D[i][j] == 0 for i in range(len(D)) for j in range(len(D[0])) if i != j)
    diag = [D[i][i] for i in range(min(M.rows, M.cols))]
    nz = [d for d in diag if d]
    assert diag[:len(nz)] == nz  # nonzero factors come first
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert all(d > 0 for d in nz)
    # d_1 is the gcd of the entries
    from math import gcd
    g = 0
    for r in rows:
        for v in r:
            g = gcd(g, v)
    assert (nz[0] if nz else 0) == g
    assert matmul(f.U.to_rows(), matmul(rows, f.V.to_rows())) == D


def test_cohomology_step_examples():
    z = cohomology_step(Matrix.zeros(3, 0), Matrix.zeros(0, 3))
    assert z.betti == 3
    t = cohomology_step(Matrix.from_rows([[2]], ring=INTEGER), Matrix.zeros(0, 1, INTEGER), INTEGER)
    assert t.betti == 0 and t.torsion == (2,)
    # chain a < b with the constant sheaf: S^0 = Q^2, S^1 = Q, d = [1, -1]
    d1 = Matrix.from_rows([[1, -1]])
    h0 = cohomology_step(Matrix.zeros(2, 0), d1)
    h1 = cohomology_step(d1, Matrix.zeros(0, 1))
    assert (h0.betti, h1.betti) == (1, 0)


def test_cohomology_step_rejects_non_complex():
    with pytest.raises(LinalgError):
        cohomology_step(Matrix.identity(1), Matrix.identity(1))


def test_scalar_text_round_trip():
    for v in (Fraction(0), Fraction(-3, 7), Fraction(5), Fraction(22, 3)):
        assert parse_scalar(format_scalar(v), strict=True) == v
    assert parse_scalar("2/4") == Fraction(1, 2)
    with pytest.raises(LinalgError):
        parse_scalar("2/4", strict=True)
    with pytest.raises(LinalgError):
        parse_scalar("1/-2", strict=True)
