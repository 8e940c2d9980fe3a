"""Hadamard upper bound on the completions of a partially fixed row set."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleNode
from .linalg import as_instance, check_index_set, project_rows


@dataclass(frozen=True)
class BoundValue:
    """Upper bound on ``log2 |det V_{J u K}|`` over all admissible completions ``K``.

    ``support`` lists ``J`` followed by the rows whose norms realize the max.
    """

    log2_absdet_ub: float
    log2_det_m_ub: float
    support: tuple


def _candidate_mask(n, candidates):
    if candidates is None:
        return np.ones(n, dtype=bool)
    c = np.asarray(candidates)
    if c.dtype == bool:
        return c.copy()
    mask = np.zeros(n, dtype=bool)
    mask[c.astype(int)] = True
    return mask


def top_k(values, mask, k):
    """Indices of the ``k`` largest ``values`` restricted to ``mask``.

    Ties go to the smaller index. Returns ``None`` when fewer than ``k``
    masked entries exist.
    """
    idx = np.flatnonzero(mask)
    if idx.size < k:
        return None
    order = np.argsort(-values[idx], kind="stable")
    return idx[order[:k]]


def _bound(state, mask):
    """Raw bound computation; ``(-inf, None)`` when the node has no nonsingular completion."""
    need = state.base.r - len(state.J)
    usable = mask & state.usable()
    if need == 0:
        return state.log_volume2, ()
    with np.errstate(divide="ignore"):
        half_log = 0.5 * np.log2(state.sq_norms)
    K = top_k(half_log, usable, need)
    if K is None:
        return -np.inf, None
    return state.log_volume2 + float(np.sum(half_log[K])), tuple(int(k) for k in K)


def hadamard_bound(state, candidates=None):
    """Bound the best completion of ``state.J`` drawn from ``candidates``.

    The product of the largest ``r - |J|`` projected row norms, times the
    volume already fixed by ``J``, dominates ``|det|`` of every completion.

    Parameters
    ----------
    state : ProjectedRows
    candidates : array-like of int or bool mask, optional
        Rows allowed in the completion. Defaults to every row outside ``J``.

    Raises
    ------
    InfeasibleNode
        If fewer than ``r - |J|`` candidates have a positive projected norm.
    """
    mask = _candidate_mask(state.base.n, candidates)
    if np.any(mask[list(state.J)]):
        if candidates is not None:
            raise ValueError("candidates must not intersect J")
        mask[list(state.J)] = False
    val, K = _bound(state, mask)
    if K is None:
        raise InfeasibleNode("not enough rows with positive projected norm to complete J")
    return BoundValue(val, 2.0 * val, tuple(state.J) + K)


def recompute_bound(state, bound):
    """Re-evaluate a bound from its stored support on the projected rows."""
    return float(np.sum(0.5 * np.log2(state.sq_norms[list(bound.support)])))


def raw_hadamard_log2(V, J):
    """Hadamard bound computed on the unprojected rows of ``V``."""
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    with np.errstate(divide="ignore"):
        half_log = 0.5 * np.log2(V.sq_norms)
    mask = np.ones(V.n, dtype=bool)
    mask[list(J)] = False
    mask &= V.sq_norms > 0
    K = top_k(half_log, mask, V.r - len(J))
    if K is None:
        return -np.inf
    return float(np.sum(half_log[list(J)]) + np.sum(half_log[K]))


def bound_dominance_check(V, J, slack=1e-9):
    """True iff the bound on the projected rows does not exceed the raw one."""
    V = as_instance(V)
    state = project_rows(V, J)
    mask = ~state.in_J
    projected, _ = _bound(state, mask)
    return projected <= raw_hadamard_log2(V, J) + slack
