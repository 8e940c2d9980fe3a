"""Random odd-cycle-packing instances and structural checks of edge selections.

An instance is a simple graph on ``r`` nodes with ``n`` edges; row ``i`` of
``V`` is the (unsigned) incidence vector of edge ``i``. A selection of ``r``
edges is nonsingular exactly when each connected component of the selected
subgraph has one cycle and that cycle is odd, in which case
``|det V_K| = 2**k`` for ``k`` components.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import BadDimensions, BadSubset
from .linalg import InstanceMatrix, log2_abs_det


@dataclass(frozen=True, eq=False)
class OcpInstance:
    r: int
    n: int
    edges: tuple
    V: InstanceMatrix
    seed: int


@dataclass(frozen=True)
class SelectionCheck:
    k: int
    absdet_log2: float


def incidence_rows(r, edges):
    V = np.zeros((len(edges), r))
    for i, (u, v) in enumerate(edges):
        V[i, u] = 1.0
        V[i, v] = 1.0
    return V


def gen_ocp(r, n, seed=0):
    """Pick ``n`` distinct edges of the complete graph on ``r`` nodes.

    Edges of ``K_r`` are listed lexicographically and the first ``n`` slots
    of a seeded partial Fisher-Yates shuffle are kept, then sorted.
    """
    if r < 3 or not r <= n <= r * (r - 1) // 2:
        raise BadDimensions(f"need 3 <= r <= n <= r(r-1)/2, got r={r}, n={n}")
    pool = [(u, v) for u in range(r) for v in range(u + 1, r)]
    rng = np.random.default_rng(seed)
    for i in range(n):
        j = int(rng.integers(i, len(pool)))
        pool[i], pool[j] = pool[j], pool[i]
    edges = tuple(sorted(pool[:n]))
    # an r-node graph with fewer than r-1 independent edge rows would fail the rank check
    V = InstanceMatrix(incidence_rows(r, edges), check_rank=False)
    return OcpInstance(r=r, n=n, edges=edges, V=V, seed=seed)


def component_parity(r, edges):
    """Count components that are unicyclic with an odd cycle.

    Returns ``None`` if any component is acyclic, has an even cycle, or has
    more than one independent cycle.
    """
    adj = [[] for _ in range(r)]
    for idx, (u, v) in enumerate(edges):
        adj[u].append((v, idx))
        adj[v].append((u, idx))
    color = [-1] * r
    k = 0
    for start in range(r):
        if color[start] >= 0:
            continue
        color[start] = 0
        queue = deque([start])
        tree_edges = set()
        comp_edges = set()
        nodes = 0
        while queue:
            u = queue.popleft()
            nodes += 1
            for w, idx in adj[u]:
                comp_edges.add(idx)
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    tree_edges.add(idx)
                    queue.append(w)
        extra = comp_edges - tree_edges
        if len(extra) != 1:
            return None
        (idx,) = extra
        u, w = edges[idx]
        # the fundamental cycle of a non-tree edge is odd iff its ends share a BFS colour
        if color[u] != color[w]:
            return None
        k += 1
    return k


def verify_selection(inst, K, atol=1e-9):
    """Structural determinant of the edge selection ``K`` (0-based rows).

    The component count is cross-checked against a direct determinant.
    """
    K = list(K)
    if len(K) != inst.r or len(set(K)) != len(K):
        raise BadSubset(f"need {inst.r} distinct edges, got {len(K)}")
    k = component_parity(inst.r, [inst.edges[i] for i in K])
    direct = log2_abs_det(inst.V, K)
    if k is None:
        if np.isfinite(direct) and direct > -20:
            raise ArithmeticError(f"structural analysis says singular but log2|det| = {direct}")
        return SelectionCheck(0, -np.inf)
    if abs(direct - k) > atol * max(1, k):
        raise ArithmeticError(f"structural log2|det| {k} disagrees with direct {direct}")
    return SelectionCheck(k, float(k))


def write_instance_csv(inst, path):
    """Write the incidence rows as integer CSV (no header)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in inst.V.rows:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def looks_like_incidence(rows):
    """True when every row is a 0/1 vector with exactly two ones."""
    rows = np.asarray(rows)
    return bool(rows.size) and bool(np.all((rows == 0) | (rows == 1))) and bool(np.all(rows.sum(axis=1) == 2))
