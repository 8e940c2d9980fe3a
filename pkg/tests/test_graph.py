import itertools

import networkx as nx
import numpy as np
import pytest

from conftest import exact_int_det
from maxdet.bnb import solve
from maxdet.exceptions import BadDimensions, BadSubset
from maxdet.graph import OcpInstance, gen_ocp, incidence_rows, looks_like_incidence, verify_selection, write_instance_csv
from maxdet.io import load_csv
from maxdet.linalg import InstanceMatrix


def make_instance(r, edges):
    edges = tuple(sorted(edges))
    return OcpInstance(r, len(edges), edges, InstanceMatrix(incidence_rows(r, edges), check_rank=False), 0)


def odd_cycle_packing(r, edges):
    """Largest number of vertex-disjoint odd cycles, by exhaustive search."""
    G = nx.Graph(list(edges))
    G.add_nodes_from(range(r))
    odd = [frozenset(c) for c in nx.simple_cycles(G) if len(c) % 2 == 1]
    best = 0

    def grow(start, used, count):
        nonlocal best
        best = max(best, count)
        for i in range(start, len(odd)):
            if not odd[i] & used:
                grow(i + 1, used | odd[i], count + 1)

    grow(0, frozenset(), 0)
    return best


class TestGenerator:
    def test_triangle(self):
        inst = gen_ocp(3, 3, seed=7)
        assert inst.edges == ((0, 1), (0, 2), (1, 2))
        np.testing.assert_array_equal(inst.V.rows.sum(axis=1), [2, 2, 2])
        assert looks_like_incidence(inst.V.rows)

    def test_deterministic(self):
        a, b = gen_ocp(8, 15, seed=3), gen_ocp(8, 15, seed=3)
        assert a.edges == b.edges
        assert gen_ocp(8, 15, seed=4).edges != a.edges

    @pytest.mark.parametrize("seed", [0, 1, 99])
    def test_complete_graph(self, seed):
        inst = gen_ocp(5, 10, seed)
        assert inst.edges == tuple(itertools.combinations(range(5), 2))

    def test_invariants(self):
        inst = gen_ocp(9, 20, seed=11)
        assert len(set(inst.edges)) == 20
        assert list(inst.edges) == sorted(inst.edges)
        assert all(u < v for u, v in inst.edges)
        rows = inst.V.rows
        assert np.all((rows == 0) | (rows == 1)) and np.all(rows.sum(axis=1) == 2)

    @pytest.mark.parametrize("r,n", [(2, 2), (4, 3), (4, 7)])
    def test_bad_dimensions(self, r, n):
        with pytest.raises(BadDimensions):
            gen_ocp(r, n)

    def test_csv_export_round_trip(self, tmp_path):
        inst = gen_ocp(6, 9, seed=2)
        p = tmp_path / "g.csv"
        write_instance_csv(inst, p)
        np.testing.assert_array_equal(load_csv(p).values, inst.V.rows)


class TestVerifySelection:
    def test_triangle(self):
        inst = gen_ocp(3, 3)
        chk = verify_selection(inst, [0, 1, 2])
        assert (chk.k, chk.absdet_log2) == (1, 1.0)

    def test_two_triangles(self):
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
        inst = make_instance(6, edges)
        K = [i for i, e in enumerate(inst.edges) if e != (2, 3)]
        assert abs(exact_int_det(inst.V.rows[K])) == 4
        chk = verify_selection(inst, K)
        assert (chk.k, chk.absdet_log2) == (2, 2.0)

    def test_tree_plus_edge_singular(self):
        # path 0-1-2-3 plus the even cycle closing 0-3
        inst = make_instance(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert exact_int_det(inst.V.rows) == 0
        chk = verify_selection(inst, [0, 1, 2, 3])
        assert chk.k == 0 and chk.absdet_log2 == -np.inf

    def test_two_cycles_and_a_tree_singular(self):
        # bowtie (two triangles sharing node 0) plus the lone edge 5-6
        edges = [(0, 1), (1, 2), (0, 2), (0, 3), (3, 4), (0, 4), (5, 6)]
        inst = make_instance(7, edges)
        assert exact_int_det(inst.V.rows) == 0
        chk = verify_selection(inst, range(7))
        assert chk.k == 0 and chk.absdet_log2 == -np.inf

    @pytest.mark.parametrize("K", [[0, 1], [0, 0, 1]])
    def test_bad_subset(self, K):
        with pytest.raises(BadSubset):
            verify_selection(gen_ocp(3, 3), K)

    def test_agrees_with_exact_determinant(self, rng):
        for t in range(60):
            r = int(rng.integers(3, 7))
            inst = gen_ocp(r, int(rng.integers(r, r * (r - 1) // 2 + 1)), seed=t)
            K = sorted(rng.choice(inst.n, size=r, replace=False))
            d = abs(exact_int_det(inst.V.rows[K]))
            chk = verify_selection(inst, K)
            if d == 0:
                assert chk.absdet_log2 == -np.inf
            else:
                assert d == 2**chk.k


def packing_instances(count):
    """Connected non-bipartite random graphs, where the optimum is twice the packing number."""
    out, seed = [], 0
    while len(out) < count:
        rng = np.random.default_rng(seed)
        r = int(rng.integers(4, 8))
        inst = gen_ocp(r, int(rng.integers(r + 1, r * (r - 1) // 2 + 1)), seed=seed)
        G = nx.Graph(list(inst.edges))
        G.add_nodes_from(range(r))
        if nx.is_connected(G) and not nx.is_bipartite(G):
            out.append(inst)
        seed += 1
    return out


class TestSolveConsistency:
    @pytest.mark.parametrize("inst", packing_instances(8), ids=lambda i: f"r{i.r}n{i.n}s{i.seed}")
    def test_matches_odd_cycle_packing(self, inst):
        rep = solve(inst.V)
        nu = odd_cycle_packing(inst.r, inst.edges)
        assert rep.optimal
        assert rep.lb_log2 == pytest.approx(2 * nu, abs=1e-9)
        assert verify_selection(inst, rep.subset).k == nu

    def test_k5_bounds(self):
        from maxdet.relax import solve_lp_relaxation

        V = gen_ocp(5, 10).V
        sol = solve_lp_relaxation(V, tol=1e-9)
        assert sol.cert_ub_ln / np.log(2) == pytest.approx(4.3399, abs=1e-4)
        assert solve(V).lb_log2 == pytest.approx(2.0, abs=1e-12)
