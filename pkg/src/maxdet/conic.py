"""Exponential-cone and semidefinite relaxations as solver-neutral conic programs.

A :class:`ConicModel` has scalar variables only. Matrix variables are spelled
out entry by entry and tied to PSD blocks through linear matrix inequalities
``sum_j x_j H_j + D >= 0``. Symmetric coefficient matrices are stored as
lower-triangular coordinates ``(row, col, value)`` with ``row >= col``; an
off-diagonal coordinate stands for both symmetric positions.

Models are written as CBF (Conic Benchmark Format, version 3) for external
solvers, or as a JSON mirror that :func:`read_model` loads back.
"""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import ParseError
from .linalg import as_instance, check_index_set

RELATIONS = ("=", "<=", ">=")


class LinearConstraint(NamedTuple):
    row: tuple  # ((var, coef), ...)
    relation: str
    rhs: float


class PsdTerm(NamedTuple):
    var: Optional[int]  # None marks the constant term
    entries: tuple  # ((row, col, value), ...) lower triangle


class PsdBlock(NamedTuple):
    order: int
    terms: tuple


@dataclass
class ConicModel:
    """Maximize ``objective`` subject to linear rows, boxes, LMIs and exponential cones.

    ``exp_cones`` holds triples ``(a1, a2, a3)`` meaning
    ``a1 >= a2 * exp(a3 / a2)``; an ``int`` entry is a variable index and a
    ``float`` entry a constant.
    """

    num_scalar_vars: int
    objective: tuple = ()
    linear_constraints: list = field(default_factory=list)
    box_bounds: list = field(default_factory=list)
    psd_blocks: list = field(default_factory=list)
    exp_cones: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def validate(self):
        """Raise ``ValueError`` if an index is out of range or a block is malformed."""
        N = self.num_scalar_vars
        if len(self.box_bounds) != N:
            raise ValueError("box_bounds must have one entry per variable")

        def check_var(j, where):
            if not (isinstance(j, (int, np.integer)) and 0 <= j < N):
                raise ValueError(f"{where}: variable index {j!r} out of range")

        for j, _ in self.objective:
            check_var(j, "objective")
        for c in self.linear_constraints:
            if c.relation not in RELATIONS:
                raise ValueError(f"unknown relation {c.relation!r}")
            for j, _ in c.row:
                check_var(j, "linear_constraints")
        for b, block in enumerate(self.psd_blocks):
            for term in block.terms:
                if term.var is not None:
                    check_var(term.var, f"psd_blocks[{b}]")
                for k, l, _ in term.entries:
                    if not (0 <= l <= k < block.order):
                        raise ValueError(f"psd_blocks[{b}]: coordinate ({k}, {l}) not lower-triangular in order {block.order}")
        for cone in self.exp_cones:
            if len(cone) != 3:
                raise ValueError("exponential cones take exactly three entries")
            vars_ = [e for e in cone if isinstance(e, (int, np.integer))]
            for j in vars_:
                check_var(j, "exp_cones")
            if len(set(vars_)) != len(vars_):
                raise ValueError("exponential cone entries must be distinct variables")
        return self


def tril_size(r):
    return r * (r + 1) // 2


def tril_positions(r):
    """``(row, col)`` of each entry of a packed lower-triangular vector.

    The first ``r`` entries are the diagonal; the strict lower triangle
    follows in row-major order.
    """
    pos = [(a, a) for a in range(r)]
    pos += [(a, b) for a in range(r) for b in range(a)]
    return pos


def _gram_terms(V, weights):
    """Coordinates of ``sum_k w_k v_k v_k^T`` for ``weights = {var: [(k, sign), ...]}``."""
    rows = V.rows
    r = V.r
    terms = {}
    for var, parts in weights.items():
        acc = {}
        for k, sign in parts:
            v = rows[k]
            for a in range(r):
                if v[a] == 0.0:
                    continue
                for b in range(a + 1):
                    val = sign * v[a] * v[b]
                    if val != 0.0:
                        acc[(a, b)] = acc.get((a, b), 0.0) + val
        terms[var] = acc
    return terms


def _z_terms(r, offset, sign=1.0):
    """Coordinates placing packed ``z`` as ``L(z)^T`` and ``Diag(diag z)`` in a 2r block."""
    out = {}
    for t, (a, b) in enumerate(tril_positions(r)):
        coords = {(r + b, a): sign}
        if a == b:
            coords[(r + a, r + a)] = sign
        out[offset + t] = coords
    return out


def _block(order, *coord_maps):
    merged = {}
    for cmap in coord_maps:
        for var, coords in cmap.items():
            acc = merged.setdefault(var, {})
            for key, val in coords.items():
                acc[key] = acc.get(key, 0.0) + val
    terms = []
    for var in sorted(merged):
        entries = tuple((k, l, float(v)) for (k, l), v in sorted(merged[var].items()) if v != 0.0)
        if entries:
            terms.append(PsdTerm(int(var), entries))
    return PsdBlock(order, tuple(terms))


def build_expcone_lp(V, J=()):
    """Continuous relaxation in exponential-cone form.

    Variables, in order: ``x`` (n), packed lower-triangular ``z``
    (``r(r+1)/2``, diagonal first), ``s`` (r). Maximizes ``sum(s)``.
    """
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    n, r = V.shape
    m = tril_size(r)
    ox, oz, os_ = 0, n, n + m
    N = n + m + r

    box = [(0.0, 1.0)] * n + [(-math.inf, math.inf)] * (m + r)
    for j in J:
        box[ox + j] = (1.0, 1.0)
    lin = [LinearConstraint(tuple((ox + i, 1.0) for i in range(n)), "=", float(r))]
    gram = _gram_terms(V, {ox + i: [(i, 1.0)] for i in range(n)})
    psd = [_block(2 * r, gram, _z_terms(r, oz))]
    cones = [(oz + i, 1.0, os_ + i) for i in range(r)]
    meta = {
        "name": "expcone_lp",
        "n": n,
        "r": r,
        "J": list(J),
        "offsets": {"x": ox, "z": oz, "s": os_},
    }
    return ConicModel(N, tuple((os_ + i, 1.0) for i in range(r)), lin, box, psd, cones, meta)


def y_index(p, q):
    """Variable offset of ``Y[p, q]`` in the packed lower triangle of ``Y``."""
    if p < q:
        p, q = q, p
    return p * (p + 1) // 2 + q


def build_sdp_relaxation(V, J=()):
    """Lifted relaxation with a moment matrix ``Y`` of order ``n + 1``.

    Variables, in order: packed ``Y`` (indices 0..n, lower triangle,
    row-major), ``z^0 .. z^n`` (each ``r(r+1)/2``), ``s`` (r).
    """
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    n, r = V.shape
    m = tril_size(r)
    nY = tril_size(n + 1)
    oz = nY
    os_ = nY + (n + 1) * m
    N = os_ + r

    def zoff(i):
        return oz + i * m

    box = [(0.0, math.inf)] * nY + [(-math.inf, math.inf)] * ((n + 1) * m + r)
    for i in range(1, n + 1):
        box[y_index(i, 0)] = (0.0, 1.0)
    for j in J:
        box[y_index(j + 1, 0)] = (1.0, 1.0)

    lin = [LinearConstraint(((y_index(0, 0), 1.0),), "=", 1.0)]
    for p in range(n + 1):
        row = [(y_index(p, 0), -float(r))] + [(y_index(p, i), 1.0) for i in range(1, n + 1)]
        lin.append(LinearConstraint(_merge_row(row), "=", 0.0))
    for i in range(1, n + 1):
        lin.append(LinearConstraint(_merge_row([(y_index(0, i), 1.0), (y_index(i, i), -1.0)]), "=", 0.0))
    lin.append(LinearConstraint(tuple((y_index(i, 0), 1.0) for i in range(1, n + 1)), "=", float(r)))

    psd = [_block(n + 1, {y_index(p, q): {(p, q): 1.0} for p in range(n + 1) for q in range(p + 1)})]
    for i in range(n + 1):
        gram = _gram_terms(V, {y_index(k + 1, i): [(k, 1.0)] for k in range(n)})
        psd.append(_block(2 * r, gram, _z_terms(r, zoff(i))))
    for i in range(1, n + 1):
        weights = {}
        for k in range(n):
            weights.setdefault(y_index(k + 1, 0), []).append((k, 1.0))
            weights.setdefault(y_index(k + 1, i), []).append((k, -1.0))
        gram = _gram_terms(V, weights)
        psd.append(_block(2 * r, gram, _z_terms(r, zoff(0)), _z_terms(r, zoff(i), -1.0)))

    cones = [(zoff(0) + j, 1.0, os_ + j) for j in range(r)]
    meta = {
        "name": "sdp_relaxation",
        "n": n,
        "r": r,
        "J": list(J),
        "offsets": {"Y": 0, "z": oz, "s": os_},
    }
    return ConicModel(N, tuple((os_ + j, 1.0) for j in range(r)), lin, box, psd, cones, meta)


def _merge_row(row):
    acc = {}
    for j, c in row:
        acc[j] = acc.get(j, 0.0) + c
    return tuple((j, c) for j, c in sorted(acc.items()) if c != 0.0)


# -- points and constraint evaluation ---------------------------------------


def triangular_certificate(X):
    """Packed ``z`` with ``V(x, z) >= 0`` and ``prod(diag) = det X``.

    With ``X = L L^T``, ``L(z) = L Diag(diag L)`` makes the Schur complement vanish.
    """
    L = np.linalg.cholesky(X)
    Z = L * np.diag(L)[None, :]
    r = X.shape[0]
    return np.array([Z[a, b] for a, b in tril_positions(r)])


def expcone_lp_point(V, x):
    """Variable vector of :func:`build_expcone_lp` for weights ``x`` (log-det attained)."""
    V = as_instance(V)
    x = np.asarray(x, dtype=float)
    X = (V.rows * x[:, None]).T @ V.rows
    z = triangular_certificate(X)
    s = np.log(z[: V.r])
    return np.concatenate([x, z, s])


def sdp_lifted_point(V, K):
    """Embed the binary point with support ``K`` into :func:`build_sdp_relaxation`'s variables."""
    V = as_instance(V)
    n, r = V.shape
    m = tril_size(r)
    x = np.zeros(n)
    x[list(K)] = 1.0
    X = (V.rows * x[:, None]).T @ V.rows
    z = triangular_certificate(X)
    y = np.concatenate([[1.0], x])
    Y = np.outer(y, y)
    vals = [Y[p, q] for p in range(n + 1) for q in range(p + 1)]
    zs = [z] + [z if x[i] else np.zeros(m) for i in range(n)]
    return np.concatenate([np.array(vals), *zs, np.log(z[:r])])


def _dense_block(block, values):
    A = np.zeros((block.order, block.order))
    for term in block.terms:
        w = 1.0 if term.var is None else values[term.var]
        for k, l, v in term.entries:
            A[k, l] += w * v
            if k != l:
                A[l, k] += w * v
    return A


def constraint_violations(model, values, tol=1e-8):
    """List human-readable violations of ``values`` against ``model``.

    Each check uses a relative tolerance ``tol * max(1, scale)``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (model.num_scalar_vars,):
        raise ValueError("values has the wrong length")
    bad = []
    for idx, c in enumerate(model.linear_constraints):
        lhs = sum(coef * values[j] for j, coef in c.row)
        scale = max(1.0, abs(c.rhs), *(abs(coef * values[j]) for j, coef in c.row))
        diff = lhs - c.rhs
        ok = {"=": abs(diff), "<=": diff, ">=": -diff}[c.relation] <= tol * scale
        if not ok:
            bad.append(f"linear[{idx}]: {lhs} {c.relation} {c.rhs}")
    for j, (lo, hi) in enumerate(model.box_bounds):
        v = values[j]
        if v < lo - tol * max(1.0, abs(lo)) or v > hi + tol * max(1.0, abs(hi)):
            bad.append(f"box[{j}]: {v} not in [{lo}, {hi}]")
    for b, block in enumerate(model.psd_blocks):
        A = _dense_block(block, values)
        w = np.linalg.eigvalsh(A)
        scale = max(1.0, float(np.max(np.abs(w))))
        if w[0] < -tol * scale:
            bad.append(f"psd[{b}]: min eigenvalue {w[0]}")
    for idx, cone in enumerate(model.exp_cones):
        a1, a2, a3 = (values[e] if isinstance(e, (int, np.integer)) else e for e in cone)
        scale = max(1.0, abs(a1))
        if a2 > 0:
            ok = a2 * math.exp(min(a3 / a2, 700.0)) <= a1 + tol * scale
        else:
            ok = a2 >= -tol and a1 >= -tol * scale and a3 <= tol * scale
        if not ok:
            bad.append(f"exp[{idx}]: ({a1}, {a2}, {a3})")
    return bad


def objective_value(model, values):
    return float(sum(c * values[j] for j, c in model.objective))


# -- serialization -----------------------------------------------------------


def _num(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_cbf(model):
    """Render ``model`` as CBF version 3 text.

    All scalar variables are free; box bounds become ``L=``/``L+``/``L-``
    rows, exponential cones become ``EXP`` rows, LMIs become ``PSDCON``.
    """
    model.validate()
    eq, ge, le = [], [], []  # (coeffs, constant) with row = coeffs.x + constant
    for c in model.linear_constraints:
        target = {"=": eq, ">=": ge, "<=": le}[c.relation]
        target.append((list(c.row), -float(c.rhs)))
    for j, (lo, hi) in enumerate(model.box_bounds):
        if lo == hi:
            eq.append(([(j, 1.0)], -lo))
            continue
        if math.isfinite(lo):
            ge.append(([(j, 1.0)], -lo))
        if math.isfinite(hi):
            le.append(([(j, 1.0)], -hi))
    exp_rows = []
    for cone in model.exp_cones:
        for e in cone:
            if isinstance(e, (int, np.integer)):
                exp_rows.append(([(int(e), 1.0)], 0.0))
            else:
                exp_rows.append(([], float(e)))

    chunks = []
    rows = []
    for kind, group in (("L=", eq), ("L+", ge), ("L-", le)):
        if group:
            chunks.append((kind, len(group)))
            rows.extend(group)
    for _ in model.exp_cones:
        chunks.append(("EXP", 3))
    rows.extend(exp_rows)

    out = ["VER", "3", "", "OBJSENSE", "MAX", ""]
    N = model.num_scalar_vars
    out += ["VAR", f"{N} 1", f"F {N}", ""]
    if model.psd_blocks:
        out += ["PSDCON", str(len(model.psd_blocks))]
        out += [str(b.order) for b in model.psd_blocks]
        out.append("")
    if rows:
        out += ["CON", f"{len(rows)} {len(chunks)}"]
        out += [f"{kind} {size}" for kind, size in chunks]
        out.append("")
    obj = [(j, c) for j, c in sorted(model.objective) if c != 0]
    if obj:
        out += ["OBJACOORD", str(len(obj))] + [f"{j} {_num(c)}" for j, c in obj] + [""]
    acoord = sorted((i, j, c) for i, (coeffs, _) in enumerate(rows) for j, c in coeffs if c != 0)
    if acoord:
        out += ["ACOORD", str(len(acoord))] + [f"{i} {j} {_num(c)}" for i, j, c in acoord] + [""]
    bcoord = [(i, b) for i, (_, b) in enumerate(rows) if b != 0]
    if bcoord:
        out += ["BCOORD", str(len(bcoord))] + [f"{i} {_num(b)}" for i, b in bcoord] + [""]
    hcoord, dcoord = [], []
    for bi, block in enumerate(model.psd_blocks):
        for term in block.terms:
            for k, l, v in term.entries:
                if term.var is None:
                    dcoord.append((bi, k, l, v))
                else:
                    hcoord.append((bi, term.var, k, l, v))
    if hcoord:
        hcoord.sort()
        out += ["HCOORD", str(len(hcoord))] + [f"{i} {j} {k} {l} {_num(v)}" for i, j, k, l, v in hcoord] + [""]
    if dcoord:
        dcoord.sort()
        out += ["DCOORD", str(len(dcoord))] + [f"{i} {k} {l} {_num(v)}" for i, k, l, v in dcoord] + [""]
    return "\n".join(out)


def _bound_json(v):
    return None if math.isinf(v) else float(v)


def _cone_entry_json(e):
    if isinstance(e, (int, np.integer)):
        return {"var": int(e)}
    return {"const": float(e)}


def to_json_dict(model):
    model.validate()
    return {
        "num_scalar_vars": int(model.num_scalar_vars),
        "objective": [[int(j), float(c)] for j, c in model.objective],
        "linear_constraints": [
            {"row": [[int(j), float(c)] for j, c in con.row], "relation": con.relation, "rhs": float(con.rhs)}
            for con in model.linear_constraints
        ],
        "box_bounds": [[_bound_json(lo), _bound_json(hi)] for lo, hi in model.box_bounds],
        "psd_blocks": [
            {
                "order": int(b.order),
                "terms": [
                    {"var": None if t.var is None else int(t.var), "entries": [[int(k), int(l), float(v)] for k, l, v in t.entries]}
                    for t in b.terms
                ],
            }
            for b in model.psd_blocks
        ],
        "exp_cones": [[_cone_entry_json(e) for e in cone] for cone in model.exp_cones],
        "metadata": model.metadata,
    }


def write_model(model, fmt, path):
    """Write ``model`` to ``path`` as ``"cbf"`` or ``"json"`` (LF line endings)."""
    if fmt == "cbf":
        text = to_cbf(model)
    elif fmt == "json":
        text = json.dumps(to_json_dict(model), indent=1, allow_nan=False)
    else:
        raise ValueError(f"unknown model format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


_FIELDS = ("num_scalar_vars", "objective", "linear_constraints", "box_bounds", "psd_blocks", "exp_cones", "metadata")


def _expect(cond, msg, field_path):
    if not cond:
        raise ParseError(msg, field=field_path)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _pairs(obj, path):
    _expect(isinstance(obj, list), "expected a list of [var, coef] pairs", path)
    out = []
    for k, p in enumerate(obj):
        _expect(isinstance(p, list) and len(p) == 2 and _is_int(p[0]) and _is_num(p[1]), "expected [int, number]", f"{path}[{k}]")
        out.append((p[0], float(p[1])))
    return tuple(out)


def _check_keys(obj, allowed, path):
    _expect(isinstance(obj, dict), "expected an object", path)
    for key in obj:
        if key not in allowed:
            raise ParseError(f"unknown field {key!r}", field=f"{path}.{key}" if path else key)
    for key in allowed:
        if key not in obj:
            raise ParseError(f"missing field {key!r}", field=f"{path}.{key}" if path else key)


def from_json_dict(data):
    _check_keys(data, _FIELDS, "")
    N = data["num_scalar_vars"]
    _expect(_is_int(N) and N >= 0, "expected a non-negative integer", "num_scalar_vars")
    objective = _pairs(data["objective"], "objective")

    lin = []
    _expect(isinstance(data["linear_constraints"], list), "expected a list", "linear_constraints")
    for k, c in enumerate(data["linear_constraints"]):
        path = f"linear_constraints[{k}]"
        _check_keys(c, ("row", "relation", "rhs"), path)
        _expect(c["relation"] in RELATIONS, f"relation must be one of {RELATIONS}", f"{path}.relation")
        _expect(_is_num(c["rhs"]), "expected a number", f"{path}.rhs")
        lin.append(LinearConstraint(_pairs(c["row"], f"{path}.row"), c["relation"], float(c["rhs"])))

    box = []
    _expect(isinstance(data["box_bounds"], list), "expected a list", "box_bounds")
    for k, b in enumerate(data["box_bounds"]):
        _expect(isinstance(b, list) and len(b) == 2 and all(v is None or _is_num(v) for v in b), "expected [lo, hi]", f"box_bounds[{k}]")
        lo = -math.inf if b[0] is None else float(b[0])
        hi = math.inf if b[1] is None else float(b[1])
        box.append((lo, hi))

    blocks = []
    _expect(isinstance(data["psd_blocks"], list), "expected a list", "psd_blocks")
    for k, b in enumerate(data["psd_blocks"]):
        path = f"psd_blocks[{k}]"
        _check_keys(b, ("order", "terms"), path)
        _expect(_is_int(b["order"]) and b["order"] > 0, "expected a positive integer", f"{path}.order")
        _expect(isinstance(b["terms"], list), "expected a list", f"{path}.terms")
        terms = []
        for t_idx, t in enumerate(b["terms"]):
            tpath = f"{path}.terms[{t_idx}]"
            _check_keys(t, ("var", "entries"), tpath)
            _expect(t["var"] is None or _is_int(t["var"]), "expected an integer or null", f"{tpath}.var")
            _expect(isinstance(t["entries"], list), "expected a list", f"{tpath}.entries")
            entries = []
            for e_idx, e in enumerate(t["entries"]):
                _expect(
                    isinstance(e, list) and len(e) == 3 and _is_int(e[0]) and _is_int(e[1]) and _is_num(e[2]),
                    "expected [row, col, value]",
                    f"{tpath}.entries[{e_idx}]",
                )
                entries.append((e[0], e[1], float(e[2])))
            terms.append(PsdTerm(t["var"], tuple(entries)))
        blocks.append(PsdBlock(b["order"], tuple(terms)))

    cones = []
    _expect(isinstance(data["exp_cones"], list), "expected a list", "exp_cones")
    for k, cone in enumerate(data["exp_cones"]):
        _expect(isinstance(cone, list) and len(cone) == 3, "expected three entries", f"exp_cones[{k}]")
        triple = []
        for e_idx, e in enumerate(cone):
            path = f"exp_cones[{k}][{e_idx}]"
            _expect(isinstance(e, dict) and len(e) == 1, "expected {'var': i} or {'const': c}", path)
            if "var" in e:
                _expect(_is_int(e["var"]), "expected an integer", f"{path}.var")
                triple.append(e["var"])
            elif "const" in e:
                _expect(_is_num(e["const"]), "expected a number", f"{path}.const")
                triple.append(float(e["const"]))
            else:
                raise ParseError(f"unknown field {next(iter(e))!r}", field=f"{path}.{next(iter(e))}")
        cones.append(tuple(triple))

    _expect(isinstance(data["metadata"], dict), "expected an object", "metadata")
    model = ConicModel(N, objective, lin, box, blocks, cones, data["metadata"])
    try:
        model.validate()
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    return model


def read_model(path, fmt="json"):
    """Load a model written by :func:`write_model` in JSON form."""
    if fmt != "json":
        raise ValueError("only the json format can be read back")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return from_json_dict(data)
