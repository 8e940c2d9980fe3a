import itertools
import json

import numpy as np
import pytest

from cbf_oracle import parse_cbf, solve_cbf
from maxdet.conic import (
    build_expcone_lp,
    build_sdp_relaxation,
    constraint_violations,
    expcone_lp_point,
    objective_value,
    read_model,
    sdp_lifted_point,
    to_cbf,
    to_json_dict,
    tril_positions,
    tril_size,
    write_model,
)
from maxdet.exceptions import ParseError
from maxdet.linalg import logdet_weighted
from maxdet.relax import solve_lp_relaxation


def dense_block(block, values):
    A = np.zeros((block.order, block.order))
    for term in block.terms:
        w = 1.0 if term.var is None else values[term.var]
        for k, l, v in term.entries:
            A[k, l] += w * v
            if k != l:
                A[l, k] += w * v
    return A


class TestLayout:
    def test_tril(self):
        assert tril_size(3) == 6
        assert tril_positions(3)[:3] == [(0, 0), (1, 1), (2, 2)]
        assert sorted(tril_positions(3)) == sorted((a, b) for a in range(3) for b in range(a + 1))


class TestExpconeLP:
    def test_dimensions(self, rng):
        m = build_expcone_lp(rng.standard_normal((3, 2)))
        assert m.num_scalar_vars == 8
        assert [b.order for b in m.psd_blocks] == [4]
        assert len(m.exp_cones) == 2
        assert all(c[1] == 1.0 for c in m.exp_cones)
        m.validate()

    def test_objective_sparsity(self, rng):
        m = build_expcone_lp(rng.standard_normal((6, 3)))
        assert len(m.objective) == 3
        assert all(c == 1.0 for _, c in m.objective)

    def test_gram_coefficients(self, rng):
        V = rng.standard_normal((5, 3))
        m = build_expcone_lp(V)
        (block,) = m.psd_blocks
        for i in range(5):
            e = np.zeros(m.num_scalar_vars)
            e[i] = 1.0
            # with z = 0 and every other x zero only x_i contributes to the top-left block
            A = dense_block(block, e)
            np.testing.assert_allclose(A[:3, :3], np.outer(V[i], V[i]), atol=1e-15)

    def test_pinned_box(self, rng):
        m = build_expcone_lp(rng.standard_normal((5, 2)), [3])
        assert list(m.box_bounds[3]) == [1.0, 1.0]
        assert list(m.box_bounds[0]) == [0.0, 1.0]

    def test_point_feasible_and_attains_logdet(self, rng):
        V = rng.standard_normal((7, 3))
        m = build_expcone_lp(V)
        x = np.full(7, 3 / 7)
        p = expcone_lp_point(V, x)
        assert constraint_violations(m, p) == []
        assert objective_value(m, p) == pytest.approx(logdet_weighted(V, x), abs=1e-10)

    def test_cbf_declares_exp_cones(self, rng):
        text = to_cbf(build_expcone_lp(rng.standard_normal((3, 2))))
        lines = text.splitlines()
        assert lines[0].startswith("VER")
        assert "OBJSENSE" in lines and lines[lines.index("OBJSENSE") + 1] == "MAX"
        con = lines.index("CON")
        _, nblocks = map(int, lines[con + 1].split())
        blocks = [lines[con + 2 + b].split() for b in range(nblocks)]
        assert sum(1 for kind, _ in blocks if kind == "EXP") == 2
        assert "\r" not in text


class TestSdpRelaxation:
    def test_dimensions(self, rng):
        m = build_sdp_relaxation(rng.standard_normal((3, 2)))
        orders = [b.order for b in m.psd_blocks]
        assert len(orders) == 2 * 3 + 2
        assert orders.count(4) == 8
        assert len(m.objective) == 2 and all(c == 1.0 for _, c in m.objective)
        m.validate()

    def test_lifted_points_feasible(self, rng):
        V = rng.standard_normal((5, 2))
        m = build_sdp_relaxation(V)
        for K in itertools.combinations(range(5), 2):
            p = sdp_lifted_point(V, K)
            assert constraint_violations(m, p) == [], K
            ref = 2 * np.log(abs(np.linalg.det(V[list(K)])))
            assert objective_value(m, p) == pytest.approx(ref, abs=1e-9)

    def test_lifted_point_respects_J(self, rng):
        V = rng.standard_normal((5, 2))
        m = build_sdp_relaxation(V, [0])
        assert constraint_violations(m, sdp_lifted_point(V, (0, 3))) == []
        assert constraint_violations(m, sdp_lifted_point(V, (2, 3))) != []


class TestSerialization:
    def test_json_round_trip(self, rng, tmp_path):
        for m in (build_expcone_lp(rng.standard_normal((6, 3)), [2]), build_sdp_relaxation(rng.standard_normal((4, 2)))):
            p = tmp_path / "m.json"
            write_model(m, "json", p)
            back = read_model(p)
            assert to_json_dict(back) == to_json_dict(m)
            q = tmp_path / "again.json"
            write_model(back, "json", q)
            assert p.read_bytes() == q.read_bytes()

    def test_writes_deterministic(self, rng, tmp_path):
        m = build_sdp_relaxation(rng.standard_normal((4, 2)))
        for fmt in ("cbf", "json"):
            a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
            write_model(m, fmt, a)
            write_model(m, fmt, b)
            assert a.read_bytes() == b.read_bytes()

    def test_truncated(self, rng, tmp_path):
        p = tmp_path / "m.json"
        write_model(build_expcone_lp(rng.standard_normal((4, 2))), "json", p)
        text = p.read_text()
        p.write_text(text[: len(text) // 2])
        with pytest.raises(ParseError) as err:
            read_model(p)
        assert err.value.line is not None

    def test_unknown_field(self, rng, tmp_path):
        d = to_json_dict(build_expcone_lp(rng.standard_normal((4, 2))))
        d["bogus_field"] = 1
        p = tmp_path / "m.json"
        p.write_text(json.dumps(d))
        with pytest.raises(ParseError, match="bogus_field"):
            read_model(p)


class TestExternalSolver:
    def test_parse_counts(self, rng):
        parsed = parse_cbf(to_cbf(build_expcone_lp(rng.standard_normal((5, 3)))))
        assert parsed["nvar"] == 5 + 6 + 3
        assert parsed["sense"] == "MAX"
        assert [t for t, _ in parsed["con"]].count("EXP") == 3

    def test_identity_value_zero(self):
        pytest.importorskip("cvxpy")
        value, status = solve_cbf(to_cbf(build_expcone_lp(np.eye(3))))
        assert status.startswith("optimal")
        assert value == pytest.approx(0.0, abs=1e-5)

    def test_matches_relaxation(self, rng):
        pytest.importorskip("cvxpy")
        V = rng.standard_normal((10, 4))
        value, _ = solve_cbf(to_cbf(build_expcone_lp(V)))
        sol = solve_lp_relaxation(V, tol=1e-9)
        assert abs(value - sol.obj_ln) <= 1e-4
        assert sol.cert_ub_ln >= value - 1e-4

    def test_mosek_reads_file(self, rng, tmp_path):
        mosek = pytest.importorskip("mosek")
        p = tmp_path / "m.cbf"
        write_model(build_sdp_relaxation(rng.standard_normal((4, 2))), "cbf", p)
        with mosek.Env() as env, env.Task() as task:
            task.readdata(str(p))
            assert task.getnumcone() + task.getnumacc() >= 1
