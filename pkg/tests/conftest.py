import itertools
from fractions import Fraction

import numpy as np
import pytest

LOG2 = np.log(2.0)

_acceptance_lines = []


def record_acceptance(line):
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


# -- independent oracles -------------------------------------------------------


def elimination_det(A):
    """Determinant by Gaussian elimination with partial pivoting (pure Python)."""
    M = [list(map(float, row)) for row in A]
    n = len(M)
    det = 1.0
    for c in range(n):
        p = max(range(c, n), key=lambda i: abs(M[i][c]))
        if M[p][c] == 0.0:
            return 0.0
        if p != c:
            M[c], M[p] = M[p], M[c]
            det = -det
        det *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            for j in range(c, n):
                M[i][j] -= f * M[c][j]
    return det


def cofactor_det(A):
    """Laplace expansion along the first row; exact for Fraction entries."""
    n = len(A)
    if n == 1:
        return A[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in A[1:]]
        total += (-1) ** j * A[0][j] * cofactor_det(minor)
    return total


def exact_int_det(A):
    return cofactor_det([[Fraction(int(v)) for v in row] for row in A])


def all_subsets(n, r):
    return list(itertools.combinations(range(n), r))


def subset_log2_dets(V, r):
    """``log2 det M_K`` for every r-subset (batched LU), with the subset list and a membership matrix."""
    V = np.asarray(V)
    n = V.shape[0]
    subs = all_subsets(n, r)
    idx = np.array(subs)
    sign, logabs = np.linalg.slogdet(V[idx])
    vals = np.where(sign == 0, -np.inf, 2.0 * logabs / LOG2)
    member = np.zeros((len(subs), n), dtype=bool)
    member[np.arange(len(subs))[:, None], idx] = True
    return subs, vals, member


def brute_force_log2(V):
    V = np.asarray(V)
    subs, vals, _ = subset_log2_dets(V, V.shape[1])
    k = int(np.argmax(vals))
    return vals[k], subs[k]


def gaussian_rank(A, tol=1e-9):
    """Rank by row reduction with partial pivoting (no SVD, no QR)."""
    M = [list(map(float, row)) for row in A]
    rows, cols = len(M), len(M[0])
    scale = max((abs(v) for row in M for v in row), default=0.0)
    rank = 0
    for c in range(cols):
        p = max(range(rank, rows), key=lambda i: abs(M[i][c]), default=None)
        if p is None or abs(M[p][c]) <= tol * scale:
            continue
        M[rank], M[p] = M[p], M[rank]
        for i in range(rows):
            if i != rank:
                f = M[i][c] / M[rank][c]
                for j in range(c, cols):
                    M[i][j] -= f * M[rank][j]
        rank += 1
        if rank == rows:
            break
    return rank


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def small_rows():
    return np.array([[2.0, 0.0], [1.0, 1.0], [0.0, 3.0]])
