"""Dense kernels: row projection without normalization and the weighted log-det.

All volumes are carried as base-2 logarithms of ``|det V_J|``; the weighted
log-det objective uses natural logs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    BadDimensions,
    DependentFixedRows,
    RankDeficient,
    SingularWeighting,
    ZeroPivot,
)

TAU_RANK = 1e-10
TAU_ZERO = 1e-12
TAU_ORTH = 1e-8
TAU_PSD = 1e-12


class InstanceMatrix:
    """Factor ``V`` (n x r, full column rank) of ``M = V V^T``.

    The row array is copied and made read-only; squared row norms are cached.

    Parameters
    ----------
    rows : array-like of shape (n, r)
    check_rank : bool, default=True
        Verify full column rank with a column-pivoted QR factorization.
    """

    __slots__ = ("rows", "sq_norms")

    def __init__(self, rows, check_rank=True):
        a = np.array(rows, dtype=float, copy=True)
        if a.ndim != 2:
            raise BadDimensions(f"expected a 2-d array, got {a.ndim}-d")
        n, r = a.shape
        if r < 1 or n < r:
            raise BadDimensions(f"need n >= r >= 1, got n={n}, r={r}")
        if not np.all(np.isfinite(a)):
            raise ValueError("instance contains NaN or infinite entries")
        if check_rank:
            rank = _pivoted_rank(a, TAU_RANK)
            if rank < r:
                raise RankDeficient(f"columns are linearly dependent (rank {rank} < r={r})")
        a.setflags(write=False)
        sq = np.einsum("ij,ij->i", a, a)
        sq.setflags(write=False)
        self.rows = a
        self.sq_norms = sq

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def r(self):
        return self.rows.shape[1]

    @property
    def shape(self):
        return self.rows.shape

    def gram(self):
        """Return ``M = V V^T`` explicitly (n x n)."""
        return self.rows @ self.rows.T

    def __repr__(self):
        return f"InstanceMatrix(n={self.n}, r={self.r})"


def _pivoted_rank(a, tol):
    if not np.any(a):
        return 0
    R = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    d = np.abs(np.diag(R))
    return int(np.count_nonzero(d > tol * d[0]))


def as_instance(V):
    """Coerce ``V`` to an :class:`InstanceMatrix` (no copy if it already is one)."""
    if isinstance(V, InstanceMatrix):
        return V
    return InstanceMatrix(V)


def check_index_set(J, n, max_size=None, name="J"):
    """Validate an index collection and return it as a tuple of ints (order kept)."""
    if J is None:
        return ()
    if isinstance(J, (set, frozenset)):
        J = sorted(J)
    out = tuple(int(j) for j in np.asarray(J, dtype=int).ravel())
    if len(set(out)) != len(out):
        raise ValueError(f"{name} contains repeated indices")
    for j in out:
        if not 0 <= j < n:
            raise IndexError(f"{name} index {j} out of range for n={n}")
    if max_size is not None and len(out) > max_size:
        raise ValueError(f"|{name}| = {len(out)} exceeds {max_size}")
    return out


@dataclass(frozen=True, eq=False)
class ProjectedRows:
    """Rows of ``V`` orthogonalized against the included set ``J``.

    ``tilde`` holds the projected rows for every index. Rows in ``J`` are
    pairwise orthogonal and every other row is orthogonal to all of them.
    ``log_volume2`` is ``log2 |det V_J|`` accumulated in inclusion order.
    """

    base: InstanceMatrix
    J: tuple
    tilde: np.ndarray
    sq_norms: np.ndarray
    log_volume2: float

    @property
    def in_J(self):
        mask = np.zeros(self.base.n, dtype=bool)
        mask[list(self.J)] = True
        return mask

    def usable(self):
        """Boolean mask of rows whose projected norm clears the zero threshold."""
        return self.sq_norms > (TAU_ZERO**2) * self.base.sq_norms


def _freeze(a):
    a.setflags(write=False)
    return a


def _project_out(X, Q, qsq):
    """Subtract from each row of ``X`` its components along the orthogonal rows ``Q``.

    Classical one-shot formula, with a single re-orthogonalization pass if any
    normalized inner product exceeds ``TAU_ORTH``.
    """
    if Q.shape[0] == 0 or X.shape[0] == 0:
        return X.copy()
    Y = X - ((X @ Q.T) / qsq) @ Q
    ynorm = np.sqrt(np.einsum("ij,ij->i", Y, Y))
    cos = np.abs(Y @ Q.T) / np.sqrt(qsq)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.where(ynorm[:, None] > 0, cos / ynorm[:, None], 0.0)
    if np.any(cos > TAU_ORTH):
        Y = Y - ((Y @ Q.T) / qsq) @ Q
    return Y


def project_rows(V, J):
    """Orthogonal projection process for the fixed rows ``J``.

    Each row of ``J`` (in the given order) is projected onto the orthogonal
    complement of the previously processed ``J`` rows; every other row is then
    projected onto the complement of all of them.

    Raises
    ------
    DependentFixedRows
        If a row of ``J`` is (numerically) in the span of the earlier ones.
    """
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    tilde = np.array(V.rows, dtype=float, copy=True)
    sq = np.array(V.sq_norms, copy=True)
    logvol = 0.0
    for pos, j in enumerate(J):
        prev = list(J[:pos])
        w = _project_out(V.rows[j : j + 1], tilde[prev], sq[prev])[0]
        wsq = float(w @ w)
        if not wsq > (TAU_ZERO**2) * V.sq_norms[j]:
            raise DependentFixedRows(f"row {j} is linearly dependent on earlier fixed rows")
        tilde[j] = w
        sq[j] = wsq
        logvol += 0.5 * np.log2(wsq)
    if J:
        rest = np.setdiff1d(np.arange(V.n), J)
        Jl = list(J)
        tilde[rest] = _project_out(V.rows[rest], tilde[Jl], sq[Jl])
        sq[rest] = np.einsum("ij,ij->i", tilde[rest], tilde[rest])
    return ProjectedRows(V, J, _freeze(tilde), _freeze(sq), float(logvol))


def include_row(state, i):
    """Child state with row ``i`` added to ``J``.

    Only one subtraction per remaining row is needed because the cached rows
    are already orthogonal to the earlier ``J`` rows.
    """
    i = int(i)
    V = state.base
    if i in state.J:
        raise ValueError(f"row {i} is already included")
    psq = float(state.sq_norms[i])
    if not psq > (TAU_ZERO**2) * V.sq_norms[i]:
        raise ZeroPivot(f"row {i} has zero projected norm")
    p = state.tilde[i]
    J = state.J + (i,)
    rest = np.ones(V.n, dtype=bool)
    rest[list(J)] = False
    tilde = np.array(state.tilde, copy=True)
    sq = np.array(state.sq_norms, copy=True)
    tilde[rest] = _project_out(state.tilde[rest], p[None, :], np.array([psq]))
    sq[rest] = np.einsum("ij,ij->i", tilde[rest], tilde[rest])
    return ProjectedRows(V, J, _freeze(tilde), _freeze(sq), state.log_volume2 + 0.5 * np.log2(psq))


def log2_abs_det(V, K):
    """``log2 |det V_K|`` via LU (``-inf`` if singular)."""
    rows = V.rows if isinstance(V, InstanceMatrix) else np.asarray(V, dtype=float)
    sign, logabs = np.linalg.slogdet(rows[list(K)])
    if sign == 0:
        return -np.inf
    return float(logabs / np.log(2.0))


def _rows_of(V):
    return V.rows if isinstance(V, InstanceMatrix) else np.asarray(V, dtype=float)


def _weighted_cholesky(rows, x, ridge=0.0):
    W = (rows * x[:, None]).T @ rows
    if ridge:
        W[np.diag_indices_from(W)] += ridge
    try:
        L = np.linalg.cholesky(W)
    except np.linalg.LinAlgError:
        return None
    piv = np.diag(L) ** 2
    if not np.all(np.isfinite(piv)) or piv.min() <= TAU_PSD * piv.max():
        return None
    return L


def logdet_weighted(V, x, ridge=0.0):
    """Natural log of ``det(V^T Diag(x) V)``; ``-inf`` when numerically singular."""
    x = np.asarray(x, dtype=float)
    L = _weighted_cholesky(_rows_of(V), x, ridge)
    if L is None:
        return -np.inf
    return float(2.0 * np.sum(np.log(np.diag(L))))


def grad_logdet_weighted(V, x):
    """Gradient of ``x -> log det(V^T Diag(x) V)``: ``g_i = v_i^T W^{-1} v_i``."""
    return logdet_and_grad(V, x)[1]


def logdet_and_grad(V, x):
    """Objective and gradient from a single Cholesky factorization."""
    rows = _rows_of(V)
    x = np.asarray(x, dtype=float)
    L = _weighted_cholesky(rows, x)
    if L is None:
        raise SingularWeighting("V^T Diag(x) V is numerically singular")
    A = scipy.linalg.solve_triangular(L, rows.T, lower=True)
    g = np.einsum("ij,ij->j", A, A)
    return float(2.0 * np.sum(np.log(np.diag(L)))), g
