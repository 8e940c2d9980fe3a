"""Depth-first branch-and-bound for the maximum-determinant row subset.

Nodes fix some rows in (``J``, kept as a projected state) and some out
(``excluded``). Node bounds come from :func:`maxdet.bounds.hadamard_bound`
evaluated on the projected rows, so every include-branch reuses the parent's
projections.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from .bounds import BoundValue, _bound
from .exceptions import Infeasible
from .linalg import as_instance, check_index_set, include_row, log2_abs_det, project_rows
from .report import gap as _gap

logger = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 600.0
DEFAULT_EPS_OPT = 1e-9


@dataclass(frozen=True, eq=False)
class BnbNode:
    state: object
    excluded: np.ndarray
    bound: BoundValue

    @property
    def depth(self):
        return len(self.state.J)

    @property
    def J(self):
        return self.state.J

    @property
    def excluded_set(self):
        return frozenset(int(i) for i in np.flatnonzero(self.excluded))

    def candidates(self):
        return ~self.state.in_J & ~self.excluded

    def is_leaf(self):
        return self.depth == self.state.base.r


@dataclass
class SolveReport:
    """Outcome of :func:`solve`. Values are ``log2 det M_K``; ``subset`` is 0-based."""

    n: int
    r: int
    lb_log2: float
    ub_log2: float
    subset: tuple
    optimal: bool
    gap: float
    nodes_explored: int
    time_seconds: float


def make_node(state, excluded):
    """Create a node, or return ``None`` if no nonsingular completion remains."""
    mask = ~state.in_J & ~excluded
    val, K = _bound(state, mask)
    if K is None:
        return None
    return BnbNode(state, excluded, BoundValue(val, 2.0 * val, tuple(state.J) + K))


def root_node(V, J=()):
    V = as_instance(V)
    state = project_rows(V, J)
    excluded = np.zeros(V.n, dtype=bool)
    excluded.setflags(write=False)
    return make_node(state, excluded)


def greedy_incumbent(V, J=()):
    """Grow ``J`` to ``r`` rows, always adding the largest projected row.

    Returns
    -------
    subset : tuple of int
        Sorted 0-based row indices.
    value : float
        ``log2 det M_subset``.
    """
    V = as_instance(V)
    state = project_rows(V, J)
    while len(state.J) < V.r:
        mask = ~state.in_J & state.usable()
        if not mask.any():
            raise Infeasible("fewer than r rows with positive projected norm")
        i = int(np.argmax(np.where(mask, state.sq_norms, -np.inf)))
        state = include_row(state, i)
    subset = tuple(sorted(state.J))
    return subset, 2.0 * log2_abs_det(V, subset)


def node_expand(node, incumbent_log2, eps_opt=DEFAULT_EPS_OPT):
    """Branch on the candidate with the largest projected norm.

    Returns the surviving children, include-branch first. A child survives
    only if its bound on ``log2 det M`` exceeds ``incumbent_log2 + eps_opt``.
    """
    if node.is_leaf():
        raise ValueError("cannot expand a leaf node")
    state = node.state
    mask = node.candidates() & state.usable()
    if not mask.any():
        return []
    pivot = int(np.argmax(np.where(mask, state.sq_norms, -np.inf)))

    children = []
    inc = make_node(include_row(state, pivot), node.excluded)
    if inc is not None:
        children.append(inc)
    excluded = node.excluded.copy()
    excluded[pivot] = True
    excluded.setflags(write=False)
    exc = make_node(state, excluded)
    if exc is not None:
        children.append(exc)
    return [c for c in children if c.bound.log2_det_m_ub > incumbent_log2 + eps_opt]


def solve(V, J=(), time_limit=DEFAULT_TIME_LIMIT, eps_opt=DEFAULT_EPS_OPT, callback=None):
    """Maximize ``det M_{J u K}`` over completions ``K`` of the fixed rows ``J``.

    Parameters
    ----------
    V : InstanceMatrix or array-like of shape (n, r)
    J : sequence of int
        0-based rows forced into the subset.
    time_limit : float
        Wall-clock budget in seconds; on expiry the incumbent and the best
        open-node bound are returned with ``optimal=False``.
    eps_opt : float
        Pruning tolerance in ``log2 det M``.
    callback : callable, optional
        Called as ``callback(node, lb_log2, ub_log2)`` for every explored node,
        where ``ub_log2`` is the global bound before the node is processed.

    Raises
    ------
    Infeasible
        If no nonsingular completion of ``J`` exists.
    """
    start = time.perf_counter()
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)

    root = root_node(V, J)
    if root is None:
        raise Infeasible("no full-rank completion of the fixed rows exists")
    best_subset, lb = greedy_incumbent(V, J)

    stack = [root]
    nodes = 0
    timed_out = False
    while stack:
        if time.perf_counter() - start > time_limit:
            timed_out = True
            break
        node = stack.pop()
        if callback is not None:
            open_ub = max([node.bound.log2_det_m_ub] + [s.bound.log2_det_m_ub for s in stack])
            callback(node, lb, max(lb, open_ub))
        nodes += 1
        if node.bound.log2_det_m_ub <= lb + eps_opt:
            continue
        if node.is_leaf():
            lb = node.bound.log2_det_m_ub
            best_subset = tuple(sorted(node.state.J))
            continue
        # include-child is pushed last so it is explored first
        stack.extend(reversed(node_expand(node, lb, eps_opt)))

    exact = 2.0 * log2_abs_det(V, best_subset)
    if timed_out:
        open_ub = max(s.bound.log2_det_m_ub for s in stack)
        ub = max(open_ub, exact)
    else:
        ub = exact
    elapsed = time.perf_counter() - start
    logger.debug("bnb: %d nodes, lb=%g ub=%g, %.3fs", nodes, exact, ub, elapsed)
    return SolveReport(
        n=V.n,
        r=V.r,
        lb_log2=exact,
        ub_log2=ub,
        subset=best_subset,
        optimal=not timed_out,
        gap=_gap(exact, ub),
        nodes_explored=nodes,
        time_seconds=elapsed,
    )
