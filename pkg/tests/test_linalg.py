from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from egedyn.errors import ArgumentError
from egedyn.linalg import (MinorIndex, char_poly, compound_det, det, elementary_symmetric,
                           squared_minor_sum_residual, triple_reciprocal_sum, minor_det,
                           principal_minor_sum, twice_cofactor_det)

from conftest import cofactor_det, gauss_cmatrix

# Gaussian-integer matrix; reference values below from exact rational arithmetic
A_INT = np.array([[2, 1 + 1j, 0, 3],
                  [1j, -1, 2, 0],
                  [0, 1, 1 - 1j, 1],
                  [1, 0, 2j, 4]])
DET_A_INT = -13 - 3j


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------- det

def test_det_small_cases():
    assert det(np.eye(3)) == pytest.approx(1.0)
    assert det(np.diag([1.0, 2.0, 3.0])) == pytest.approx(6.0)


def test_det_exact_integer_matrix():
    assert rel(det(A_INT), DET_A_INT) < 1e-14


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_det_matches_cofactor_expansion(seed, n):
    A = gauss_cmatrix(n, np.random.default_rng(seed))
    assert rel(det(A), cofactor_det(A)) < 1e-10


def test_det_rejects_non_finite():
    with pytest.raises(ArgumentError):
        det(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(ArgumentError):
        det(np.ones((2, 3)))


# ---------------------------------------------------------------- minors

def test_minor_det_identity():
    assert minor_det(np.eye(3), MinorIndex((1,), (1,))) == pytest.approx(1.0)
    assert minor_det(np.eye(3), MinorIndex((1,), (2,))) == pytest.approx(0.0)


def test_minor_det_exact():
    assert minor_det(A_INT, MinorIndex((1, 3), (2, 4))) == pytest.approx(-4.0, abs=1e-13)


def test_minor_det_explicit_submatrix(rng):
    A = gauss_cmatrix(5, rng)
    sub = A[np.ix_([1, 3, 4], [0, 2, 4])]  # rows {1,3}, cols {2,4} removed (1-based)
    assert rel(minor_det(A, MinorIndex((1, 3), (2, 4))), np.linalg.det(sub)) < 1e-12


def test_minor_index_validation():
    with pytest.raises(ArgumentError):
        MinorIndex((1, 1), (1, 2))
    with pytest.raises(ArgumentError):
        MinorIndex((1,), (1, 2))
    with pytest.raises(ArgumentError):
        MinorIndex((1, 2, 3), (1, 2, 3))
    with pytest.raises(ArgumentError):
        minor_det(np.eye(3), MinorIndex((4,), (1,)))
    assert MinorIndex((3, 1), (2, 1)).removed_rows == (1, 3)


# ---------------------------------------------------------------- characteristic polynomial

def test_char_poly_diagonal():
    cp = char_poly(np.diag([1.0, 2.0]), 0.0)
    assert (cp.value, cp.d1, cp.d2) == pytest.approx((2.0, -3.0, 2.0))


def test_char_poly_at_eigenvalue():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])  # eigenvalues +-1
    cp = char_poly(A, 1.0)
    assert abs(cp.value) < 1e-14
    assert cp.d1 == pytest.approx(2.0)


@pytest.mark.parametrize("lam, f, f1, f2", [
    (0.0, -13 - 3j, 14 + 7j, 6 - 16j),
    (1 + 1j, 16 + 10j, 22 - 31j, -36 - 22j),
])
@pytest.mark.parametrize("route", ["minors", "eigen"])
def test_char_poly_exact_values(lam, f, f1, f2, route):
    cp = char_poly(A_INT, lam, route=route)
    assert rel(cp.value, f) < 1e-12
    assert rel(cp.d1, f1) < 1e-12
    assert rel(cp.d2, f2) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7))
def test_char_poly_log_derivative_at_eigenvalues(seed, n):
    A = gauss_cmatrix(n, np.random.default_rng(seed))
    eigs = np.linalg.eigvals(A)
    for i, lam in enumerate(eigs):
        cp = char_poly(A, lam)
        pair = 2.0 * np.sum(1.0 / (lam - np.delete(eigs, i)))
        assert abs(cp.d2 / cp.d1 - pair) <= 1e-8 * max(abs(pair), 1.0)


def test_char_poly_unknown_route():
    with pytest.raises(ArgumentError):
        char_poly(np.eye(2), 0.0, route="qr")


# ---------------------------------------------------------------- principal minors

def test_principal_minor_sum_small():
    assert principal_minor_sum(np.diag([1.0, 2.0, 3.0]), 2) == pytest.approx(11.0)


def test_principal_minor_sum_trace(rng):
    A = gauss_cmatrix(4, rng)
    assert principal_minor_sum(A, 1) == pytest.approx(np.trace(A))


def test_principal_minor_sum_exact():
    assert rel(principal_minor_sum(A_INT, 2), 3 - 8j) < 1e-13
    assert rel(principal_minor_sum(A_INT, 3), -14 - 7j) < 1e-13


def test_principal_minor_sum_symmetric_polynomial(rng):
    A = gauss_cmatrix(5, rng)
    e3 = elementary_symmetric(np.linalg.eigvals(A), 3)
    assert rel(principal_minor_sum(A, 3), e3) < 1e-9


@pytest.mark.parametrize("k", [0, 4])
def test_principal_minor_sum_range(k):
    with pytest.raises(ArgumentError):
        principal_minor_sum(np.eye(3), k)


def test_elementary_symmetric_small():
    assert elementary_symmetric([1, 2, 3], 2) == pytest.approx(11.0)
    assert elementary_symmetric([1, 2, 3], 0) == pytest.approx(1.0)


# ---------------------------------------------------------------- compound / Cauchy-Binet

def test_compound_det_identity():
    assert compound_det(np.eye(4), [1, 2], [1, 2]) == pytest.approx(1.0)
    assert compound_det(np.eye(4), [1, 2], [1, 3]) == pytest.approx(0.0)


def test_cauchy_binet(rng):
    A, B = gauss_cmatrix(5, rng), gauss_cmatrix(5, rng)
    C = A @ B
    for alpha in combinations(range(1, 6), 2):
        beta = (2, 5)
        rhs = sum(compound_det(A, alpha, g) * compound_det(B, g, beta)
                  for g in combinations(range(1, 6), 2))
        assert rel(compound_det(C, alpha, beta), rhs) < 1e-10


def test_cauchy_binet_rectangular(rng):
    A = rng.standard_normal((3, 5)) + 0j
    B = rng.standard_normal((5, 3)) + 0j
    rhs = sum(compound_det(A, (1, 2, 3), g) * compound_det(B, g, (1, 2, 3))
              for g in combinations(range(1, 6), 3))
    assert rel(np.linalg.det(A @ B), rhs) < 1e-10


def test_compound_det_errors():
    with pytest.raises(ArgumentError):
        compound_det(np.eye(3), [1, 2], [1])
    with pytest.raises(ArgumentError):
        compound_det(np.eye(3), [1, 4], [1, 2])
    with pytest.raises(ArgumentError):
        compound_det(np.eye(3), [1, 1], [1, 2])


# ---------------------------------------------------------------- twice cofactor expansion

def test_twice_cofactor_small():
    assert twice_cofactor_det(np.eye(3), 1, 2) == pytest.approx(1.0)
    assert twice_cofactor_det(np.diag([2.0, 3.0, 4.0]), 1, 3) == pytest.approx(24.0)


def test_twice_cofactor_exact_all_pairs():
    for k, l in combinations(range(1, 5), 2):
        assert rel(twice_cofactor_det(A_INT, k, l), DET_A_INT) < 1e-13


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 6))
def test_twice_cofactor_matches_oracle(seed, n):
    A = gauss_cmatrix(n, np.random.default_rng(seed))
    ref = cofactor_det(A)
    for k, l in combinations(range(1, n + 1), 2):
        assert rel(twice_cofactor_det(A, k, l), ref) < 1e-10


def test_twice_cofactor_errors():
    with pytest.raises(ArgumentError):
        twice_cofactor_det(np.eye(3), 2, 2)
    with pytest.raises(ArgumentError):
        twice_cofactor_det(np.eye(3), 3, 1)
    with pytest.raises(ArgumentError):
        twice_cofactor_det(np.eye(2), 1, 2)


# ---------------------------------------------------------------- squared minor sums

@pytest.mark.parametrize("lam", [0.0, 1.5 - 2j, 3j])
def test_squared_minor_sum_diagonal(lam):
    A = np.diag([1.0, -2.0, 0.5 + 1j, 4.0])
    assert abs(squared_minor_sum_residual(A, lam)) < 1e-10


def test_squared_minor_sum_at_eigenvalue(rng):
    A = gauss_cmatrix(5, rng)
    eigs = np.linalg.eigvals(A)
    lam = eigs[2]
    M = lam * np.eye(5) - A
    M2 = M @ M
    lhs = sum(np.linalg.det(np.delete(np.delete(M2, k, 0), k, 1)) for k in range(5))
    fp = np.prod(lam - np.delete(eigs, 2))
    assert rel(lhs, fp ** 2) < 1e-8
    assert abs(squared_minor_sum_residual(A, lam)) < 1e-8 * abs(fp) ** 2


def test_squared_minor_sum_at_zero(rng):
    A = gauss_cmatrix(5, rng)
    fp0 = char_poly(A, 0.0).d1
    assert abs(squared_minor_sum_residual(A, 0.0)) <= 1e-8 * abs(fp0) ** 2


# ---------------------------------------------------------------- triple sum

def test_triple_sum_examples():
    assert abs(triple_reciprocal_sum([0, 1, 2])) < 1e-14
    assert abs(triple_reciprocal_sum([1, 1j, -1, -1j])) < 1e-14


def test_triple_sum_random_tuples(rng):
    from egedyn.linalg import _triple_sum_terms
    for _ in range(50):
        z = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        total, biggest = _triple_sum_terms(z)
        assert abs(total) <= 1e-10 * biggest


def test_triple_sum_errors():
    with pytest.raises(ArgumentError):
        triple_reciprocal_sum([0, 1])
    with pytest.raises(ArgumentError):
        triple_reciprocal_sum([0, 1, 1])
