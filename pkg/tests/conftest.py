"""Shared fixtures, independent oracles and the acceptance summary hook."""

from itertools import permutations

import numpy as np
import pytest

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE = {}


def record_acceptance(number, title, ok, note=""):
    ACCEPTANCE[number] = (title, bool(ok), note)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, note = ACCEPTANCE[num]
        flag = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {flag}  {title}  {note}".rstrip())


# ---------------------------------------------------------------- oracles

def cofactor_det(A):
    """Laplace expansion along the first row; exponential cost, tiny N only."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return A[0, 0]
    total = 0j
    for j in range(n):
        sub = np.delete(np.delete(A, 0, axis=0), j, axis=1)
        total += (-1) ** j * A[0, j] * cofactor_det(sub)
    return total


def brute_force_matching(prev, nxt):
    """Permutation minimizing sum |prev_i - nxt_perm(i)|^2, by enumeration."""
    best, arg = np.inf, None
    for p in permutations(range(len(prev))):
        c = sum(abs(prev[i] - nxt[p[i]]) ** 2 for i in range(len(prev)))
        if c < best:
            best, arg = c, p
    return np.array(arg), best


def gauss_cmatrix(n, rng):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
