"""Dense complex determinant primitives and determinant identities.

Indices in :class:`MinorIndex` and in the public ``k``/``l`` arguments are
1-based, matching the usual matrix notation ``A_{k|l}`` (row ``k`` and
column ``l`` removed).  Everything internal is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ArgumentError

__all__ = [
    "CharPolyEval",
    "MinorIndex",
    "as_cmatrix",
    "char_poly",
    "compound_det",
    "det",
    "elementary_symmetric",
    "squared_minor_sum_residual",
    "triple_reciprocal_sum",
    "minor_det",
    "principal_minor_sum",
    "random_cmatrix",
    "twice_cofactor_det",
]


def as_cmatrix(A) -> np.ndarray:
    """Validate and return ``A`` as a square complex128 array."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ArgumentError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ArgumentError("matrix has non-finite entries")
    return A


def random_cmatrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix with i.i.d. standard complex Gaussian entries (E|a_ij|^2 = 1)."""
    g = rng.standard_normal((2, n, n))
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def det(A) -> complex:
    """Determinant by LU factorization with partial pivoting."""
    A = as_cmatrix(A)
    return complex(np.linalg.det(A))


def _det0(A: np.ndarray) -> complex:
    # 0x0 determinant is 1 by convention
    if A.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(A))


def _delete(A: np.ndarray, rows, cols) -> np.ndarray:
    keep_r = [i for i in range(A.shape[0]) if i not in rows]
    keep_c = [j for j in range(A.shape[1]) if j not in cols]
    return A[np.ix_(keep_r, keep_c)]


@dataclass(frozen=True)
class MinorIndex:
    """Rows and columns removed from a matrix, 1-based.

    ``MinorIndex((k,), (l,))`` is ``A_{k|l}``; ``MinorIndex((k, l), (p, q))``
    is ``A_{kl|pq}``.  Index sets are stored sorted.
    """

    removed_rows: tuple
    removed_cols: tuple

    def __post_init__(self):
        rows = tuple(sorted(int(i) for i in self.removed_rows))
        cols = tuple(sorted(int(j) for j in self.removed_cols))
        if len(rows) != len(cols) or len(rows) not in (1, 2):
            raise ArgumentError("a minor removes 1 or 2 rows and as many columns")
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise ArgumentError("duplicate index in minor")
        if min(rows + cols) < 1:
            raise ArgumentError("minor indices are 1-based")
        object.__setattr__(self, "removed_rows", rows)
        object.__setattr__(self, "removed_cols", cols)

    def check(self, n: int) -> None:
        if max(self.removed_rows + self.removed_cols) > n:
            raise ArgumentError(f"minor index out of range for N={n}")


def minor_det(A, idx: MinorIndex) -> complex:
    """Determinant of ``A`` with ``idx`` rows/columns removed (no sign factor)."""
    A = as_cmatrix(A)
    idx.check(A.shape[0])
    rows = {i - 1 for i in idx.removed_rows}
    cols = {j - 1 for j in idx.removed_cols}
    return _det0(_delete(A, rows, cols))


def first_minors(A) -> np.ndarray:
    """All ``det(A_{k|l})`` as an N x N array (0-based positions)."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    for k in range(n):
        for l in range(n):
            out[k, l] = _det0(_delete(A, {k}, {l}))
    return out


def second_principal_minors(A) -> np.ndarray:
    """``det(A_{kl|kl})`` for k < l, as a symmetric array with zero diagonal."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k, l in combinations(range(n), 2):
        out[k, l] = out[l, k] = _det0(_delete(A, {k, l}, {k, l}))
    return out


def elementary_symmetric(values: Sequence[complex], k: int) -> complex:
    """k-th elementary symmetric polynomial via the product recurrence."""
    e = np.zeros(k + 1, dtype=np.complex128)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return complex(e[k])


def principal_minor_sum(A, k: int) -> complex:
    """Sum of all k x k principal minors of ``A``."""
    A = as_cmatrix(A)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ArgumentError(f"k must lie in [1, {n}], got {k}")
    total = 0.0 + 0.0j
    for subset in combinations(range(n), k):
        total += _det0(A[np.ix_(subset, subset)])
    return complex(total)


def compound_det(A, rows: Sequence[int], cols: Sequence[int]) -> complex:
    """``det A(rows, cols)`` for 1-based index sets taken in increasing order.

    ``A`` may be rectangular here, as in the Cauchy-Binet formula.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ArgumentError("expected a matrix")
    rows = sorted(int(i) for i in rows)
    cols = sorted(int(j) for j in cols)
    if len(rows) != len(cols):
        raise ArgumentError("row and column index sets must have equal size")
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ArgumentError("duplicate index")
    if rows and (rows[0] < 1 or rows[-1] > A.shape[0] or cols[0] < 1 or cols[-1] > A.shape[1]):
        raise ArgumentError("index out of range")
    r = [i - 1 for i in rows]
    c = [j - 1 for j in cols]
    return _det0(A[np.ix_(r, c)])


def twice_cofactor_det(A, k: int, l: int) -> complex:
    """Determinant through the two-step cofactor expansion along rows k and l.

    Row ``k`` is expanded first, then each ``(N-1)``-minor along the
    original row ``l``.  The terms with ``a_kk``, ``a_kl`` or ``a_lk`` are
    kept separate exactly as in the eight-term form, and every term is
    evaluated literally.
    """
    A = as_cmatrix(A)
    n = A.shape[0]
    if n < 3:
        raise ArgumentError("twice cofactor expansion needs N >= 3")
    if not (1 <= k < l <= n):
        raise ArgumentError(f"need 1 <= k < l <= N, got k={k}, l={l}")

    def a(i, j):
        return A[i - 1, j - 1]

    def m2(p, q):
        # A_{kl|pq}
        return _det0(_delete(A, {k - 1, l - 1}, {p - 1, q - 1}))

    idx = range(1, n + 1)
    total = a(k, k) * _det0(_delete(A, {k - 1}, {k - 1}))
    total -= a(k, l) * a(l, k) * m2(l, k)
    for q in idx:
        if q in (k, l):
            continue
        if q < l:
            total += (-1) ** (k + q - 1) * a(k, l) * a(l, q) * m2(l, q)
        else:
            total += (-1) ** (k + q) * a(k, l) * a(l, q) * m2(l, q)
    for p in idx:
        if p in (k, l):
            continue
        if p > k:
            total += (-1) ** (l + p - 1) * a(k, p) * a(l, k) * m2(p, k)
        else:
            total += (-1) ** (l + p) * a(k, p) * a(l, k) * m2(p, k)
    for p in idx:
        if p in (k, l):
            continue
        for q in idx:
            if q == k or q == p:
                continue
            if p > q:
                total += (-1) ** (k + l + p + q - 1) * a(k, p) * a(l, q) * m2(p, q)
            else:
                total += (-1) ** (k + l + p + q) * a(k, p) * a(l, q) * m2(p, q)
    return complex(total)


@dataclass(frozen=True)
class CharPolyEval:
    """``f(lam) = det(lam I - A)`` and its first two lambda-derivatives."""

    value: complex
    d1: complex
    d2: complex


def _char_poly_minors(A: np.ndarray, lam: complex) -> CharPolyEval:
    n = A.shape[0]
    M = lam * np.eye(n) - A
    value = _det0(M)
    d1 = sum(_det0(_delete(M, {k}, {k})) for k in range(n))
    d2 = 2.0 * sum(_det0(_delete(M, {k, l}, {k, l})) for k, l in combinations(range(n), 2))
    return CharPolyEval(complex(value), complex(d1), complex(d2))


def _char_poly_eigen(eigs: np.ndarray, lam: complex) -> CharPolyEval:
    d = lam - np.asarray(eigs, dtype=np.complex128)
    n = d.size
    value = np.prod(d)
    d1 = sum(np.prod(np.delete(d, k)) for k in range(n))
    d2 = 2.0 * sum(np.prod(np.delete(d, [k, l])) for k, l in combinations(range(n), 2))
    return CharPolyEval(complex(value), complex(d1), complex(d2))


def char_poly(A, lam: complex, route: str = "minors", eigenvalues=None) -> CharPolyEval:
    """Evaluate the characteristic polynomial and its derivatives at ``lam``.

    Parameters
    ----------
    A : (N, N) array_like
    lam : complex
    route : {"minors", "eigen"}
        ``"minors"`` uses ``f' = sum_k det((lam I - A)_{k|k})`` and
        ``f'' = 2 sum_{k<l} det((lam I - A)_{kl|kl})``; ``"eigen"`` expands
        ``prod_j (lam - lam_j)`` around the eigenvalues.
    eigenvalues : array_like, optional
        Precomputed eigenvalues for the ``"eigen"`` route.
    """
    A = as_cmatrix(A)
    lam = complex(lam)
    if route == "minors":
        return _char_poly_minors(A, lam)
    if route == "eigen":
        eigs = np.linalg.eigvals(A) if eigenvalues is None else eigenvalues
        return _char_poly_eigen(np.asarray(eigs), lam)
    raise ArgumentError(f"unknown route {route!r}")


def squared_minor_sum_residual(A, lam: complex, eigenvalues=None) -> complex:
    """Residual of the minor-sum identity for ``(lam I - A)^2``.

    Returns ``sum_k det((lam I - A)^2_{k|k})`` minus
    ``f'(lam)^2 - 2 sum_{k<l} (lam-lam_k)(lam-lam_l) prod_{m!=k,l} (lam-lam_m)^2``.
    The left side uses minors only, the right side eigenvalues only.
    """
    A = as_cmatrix(A)
    lam = complex(lam)
    lhs, rhs, _ = _squared_minor_terms(A, lam, eigenvalues)
    return complex(lhs - rhs)


def _squared_minor_terms(A, lam, eigenvalues=None):
    n = A.shape[0]
    eigs = np.linalg.eigvals(A) if eigenvalues is None else np.asarray(eigenvalues)
    M = lam * np.eye(n) - A
    M2 = M @ M
    lhs = sum(_det0(_delete(M2, {k}, {k})) for k in range(n))
    d = lam - eigs
    fl = sum(np.prod(np.delete(d, k)) for k in range(n))
    cross = 0.0 + 0.0j
    for k, l in combinations(range(n), 2):
        cross += d[k] * d[l] * np.prod(np.delete(d, [k, l]) ** 2)
    rhs = fl**2 - 2.0 * cross
    scale = max(abs(lhs), abs(fl) ** 2, 2.0 * abs(cross), 1e-300)
    return complex(lhs), complex(rhs), scale


def triple_reciprocal_sum(z: Sequence[complex]) -> complex:
    """``sum_i sum_{j<k; j,k != i} 1/((z_i - z_j)(z_i - z_k))``, identically zero."""
    total, _ = _triple_sum_terms(z)
    return total


def _triple_sum_terms(z):
    z = np.asarray(z, dtype=np.complex128).ravel()
    n = z.size
    if n < 3:
        raise ArgumentError("need at least 3 points")
    diff = z[:, None] - z[None, :]
    off = ~np.eye(n, dtype=bool)
    if np.any(diff[off] == 0):
        raise ArgumentError("points must be pairwise distinct")
    total = 0.0 + 0.0j
    biggest = 0.0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for j, k in combinations(others, 2):
            term = 1.0 / (diff[i, j] * diff[i, k])
            total += term
            biggest = max(biggest, abs(term))
    return complex(total), biggest
