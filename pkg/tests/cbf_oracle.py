"""Independent CBF reader that hands the file to an external conic solver (cvxpy)."""

import numpy as np


def parse_cbf(text):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    pos = 0
    out = {"psdcon": [], "con": [], "acoord": [], "bcoord": [], "hcoord": [], "dcoord": [], "obj": []}

    def take():
        nonlocal pos
        pos += 1
        return lines[pos - 1]

    while pos < len(lines):
        key = take()
        if key == "VER":
            out["ver"] = int(take())
        elif key == "OBJSENSE":
            out["sense"] = take()
        elif key == "VAR":
            nvar, ncones = map(int, take().split())
            out["nvar"] = nvar
            out["var_cones"] = [take().split() for _ in range(ncones)]
        elif key == "PSDCON":
            out["psdcon"] = [int(take()) for _ in range(int(take()))]
        elif key == "CON":
            nrow, nchunk = map(int, take().split())
            out["nrow"] = nrow
            out["con"] = [(t, int(s)) for t, s in (take().split() for _ in range(nchunk))]
        elif key == "OBJACOORD":
            out["obj"] = [(int(a), float(b)) for a, b in (take().split() for _ in range(int(take())))]
        elif key == "ACOORD":
            out["acoord"] = [(int(i), int(j), float(v)) for i, j, v in (take().split() for _ in range(int(take())))]
        elif key == "BCOORD":
            out["bcoord"] = [(int(i), float(v)) for i, v in (take().split() for _ in range(int(take())))]
        elif key == "HCOORD":
            out["hcoord"] = [tuple(map(int, p[:4])) + (float(p[4]),) for p in (take().split() for _ in range(int(take())))]
        elif key == "DCOORD":
            out["dcoord"] = [tuple(map(int, p[:3])) + (float(p[3]),) for p in (take().split() for _ in range(int(take())))]
        else:
            raise ValueError(f"unexpected CBF keyword {key}")
    return out


def solve_cbf(text, solver="CLARABEL"):
    """Solve a CBF problem (free vars, L=/L+/L-/EXP rows, PSDCON) and return the optimal value."""
    import cvxpy as cp

    d = parse_cbf(text)
    N = d["nvar"]
    assert d["var_cones"] == [["F", str(N)]]
    x = cp.Variable(N)
    m = d.get("nrow", 0)
    A = np.zeros((m, N))
    b = np.zeros(m)
    for i, j, v in d["acoord"]:
        A[i, j] += v
    for i, v in d["bcoord"]:
        b[i] += v
    cons = []
    row = 0
    for kind, size in d["con"]:
        expr = A[row : row + size] @ x + b[row : row + size]
        if kind == "L=":
            cons.append(expr == 0)
        elif kind == "L+":
            cons.append(expr >= 0)
        elif kind == "L-":
            cons.append(expr <= 0)
        elif kind == "EXP":
            # CBF EXP (a1, a2, a3): a1 >= a2 exp(a3 / a2); cvxpy ExpCone(x, y, z): y exp(x/y) <= z
            cons.append(cp.constraints.ExpCone(expr[2], expr[1], expr[0]))
        else:
            raise ValueError(kind)
        row += size
    for bi, order in enumerate(d["psdcon"]):
        H = {}
        D = np.zeros((order, order))
        for i, j, k, l, v in d["hcoord"]:
            if i != bi:
                continue
            M = H.setdefault(j, np.zeros((order, order)))
            M[k, l] += v
            if k != l:
                M[l, k] += v
        for i, k, l, v in d["dcoord"]:
            if i == bi:
                D[k, l] += v
                if k != l:
                    D[l, k] += v
        idx = sorted(H)
        stacked = np.stack([H[j] for j in idx]).reshape(len(idx), -1)
        expr = cp.reshape(x[idx] @ stacked, (order, order), order="C") + D
        cons.append(0.5 * (expr + expr.T) >> 0)
    c = np.zeros(N)
    for j, v in d["obj"]:
        c[j] += v
    obj = cp.Maximize(c @ x) if d["sense"] == "MAX" else cp.Minimize(c @ x)
    prob = cp.Problem(obj, cons)
    prob.solve(solver=solver)
    return prob.value, prob.status
