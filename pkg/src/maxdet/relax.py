"""Concave log-det relaxation over the capped simplex.

Maximizes ``f(x) = log det(V^T Diag(x) V)`` subject to ``sum(x) = r``,
``0 <= x <= 1`` and ``x_J = 1`` by projected gradient ascent. Every iterate
also yields a rigorous upper bound: because ``f`` is concave and the vertices
of the feasible set are binary, ``f(x) + max_v grad f(x)^T (v - x)`` bounds
both the relaxed and the binary optimum.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleDomain, SingularWeighting, StartSingular
from .linalg import InstanceMatrix, as_instance, check_index_set, logdet_and_grad, logdet_weighted, project_rows

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
MIN_STEP = 1e-16
STALL_ITERS = 50
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class CappedSimplex:
    """``{x in [0,1]^n : sum(x) = r, x_J = 1}``."""

    n: int
    r: int
    fixed_one: tuple = ()

    def __post_init__(self):
        k = len(self.fixed_one)
        if self.r < k or self.r - k > self.n - k:
            raise InfeasibleDomain(f"empty domain: n={self.n}, r={self.r}, |J|={k}")

    @property
    def free(self):
        mask = np.ones(self.n, dtype=bool)
        mask[list(self.fixed_one)] = False
        return mask

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            return False
        if abs(x.sum() - self.r) > tol:
            return False
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        return bool(np.all(np.abs(x[list(self.fixed_one)] - 1.0) <= tol))

    def start(self):
        """Uniform point: 1 on ``J``, ``(r-|J|)/(n-|J|)`` elsewhere."""
        k = len(self.fixed_one)
        x = np.full(self.n, (self.r - k) / (self.n - k) if self.n > k else 0.0)
        x[list(self.fixed_one)] = 1.0
        return x


@dataclass
class RelaxSolution:
    x: np.ndarray
    obj_ln: float
    cert_ub_ln: float
    iters: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)


def _clip_sum(y, tau):
    return float(np.clip(y - tau, 0.0, 1.0).sum())


def _shift_for_sum(y, s):
    """Find ``tau`` with ``sum(clip(y - tau, 0, 1)) == s`` for ``0 < s < len(y)``.

    ``h(tau)`` is piecewise linear and non-increasing with kinks at ``y`` and
    ``y - 1``; locate the bracketing kinks by bisection over the sorted list,
    then solve the linear piece exactly.
    """
    bps = np.unique(np.concatenate([y - 1.0, y]))
    lo, hi = 0, bps.size - 1  # h(bps[0]) = len(y) >= s >= 0 = h(bps[-1])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _clip_sum(y, bps[mid]) >= s:
            lo = mid
        else:
            hi = mid
    a, b = bps[lo], bps[hi]
    ha, hb = _clip_sum(y, a), _clip_sum(y, b)
    if ha == hb:
        return a
    return a + (ha - s) * (b - a) / (ha - hb)


def project_capped_simplex(y, domain):
    """Euclidean projection of ``y`` onto ``domain``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (domain.n,):
        raise ValueError(f"expected a vector of length {domain.n}")
    free = domain.free
    s = domain.r - len(domain.fixed_one)
    x = np.ones(domain.n)
    yf = y[free]
    if s == 0:
        x[free] = 0.0
    elif s == yf.size:
        x[free] = 1.0
    else:
        tau = _shift_for_sum(yf, s)
        xf = np.clip(yf - tau, 0.0, 1.0)
        # absorb the last rounding error on a coordinate strictly inside (0, 1)
        inner = np.flatnonzero((xf > 0) & (xf < 1))
        if inner.size:
            j = inner[np.argmax(np.minimum(xf[inner], 1 - xf[inner]))]
            xf[j] = np.clip(xf[j] + (s - xf.sum()), 0.0, 1.0)
        x[free] = xf
    return x


def _vertex_value(g, domain):
    """``max_v g^T v`` over vertices: J plus the largest free components."""
    free = domain.free
    s = domain.r - len(domain.fixed_one)
    gf = np.sort(g[free])[::-1]
    return float(g[list(domain.fixed_one)].sum() + gf[:s].sum())


def certificate_ub(x, V, domain):
    """Upper bound ``f(x) + max_v grad^T (v - x)`` on the binary and relaxed optimum (natural log)."""
    f, g = logdet_and_grad(V, x)
    return f + _vertex_value(g, domain) - float(g @ x)


def solve_lp_relaxation(V, J=(), tol=1e-6, max_iters=5000, keep_trace=False):
    """Projected gradient ascent with Armijo backtracking and certified bound.

    Parameters
    ----------
    V : InstanceMatrix or array-like of shape (n, r)
    J : sequence of int
        0-based rows pinned to 1.
    tol : float
        Stop once ``cert - f(x) <= tol * max(1, |f(x)|)``.
    max_iters : int

    Returns
    -------
    RelaxSolution
        ``cert_ub_ln`` is the smallest certificate seen over all iterates.
    """
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    domain = CappedSimplex(V.n, V.r, J)
    x = domain.start()

    ridge = 0.0
    f = logdet_weighted(V, x)
    if not np.isfinite(f):
        ridge = 1e-10 * float(np.mean(V.sq_norms))
        if not np.isfinite(logdet_weighted(V, x, ridge)):
            raise StartSingular("weighted Gram matrix is singular at the starting point")
        logger.warning("singular start; line search uses ridge %g", ridge)

    def objective(z):
        return logdet_weighted(V, z, ridge) if ridge else logdet_weighted(V, z)

    def gradient(z):
        if ridge:
            W = (V.rows * z[:, None]).T @ V.rows + ridge * np.eye(V.r)
            A = np.linalg.solve(W, V.rows.T)
            return np.einsum("ij,ji->i", V.rows, A)
        return logdet_and_grad(V, z)[1]

    best_cert = np.inf
    trace = []
    converged = False
    fx = objective(x)
    it = 0
    stall = 0
    for it in range(1, max_iters + 1):
        try:
            f_true, g_true = logdet_and_grad(V, x)
        except SingularWeighting:
            f_true, g_true = -np.inf, None
        if g_true is not None:
            cert = f_true + _vertex_value(g_true, domain) - float(g_true @ x)
            best_cert = min(best_cert, cert)
            if keep_trace:
                trace.append((f_true, cert))
            if best_cert - f_true <= tol * max(1.0, abs(f_true)):
                converged = True
                break
        g = g_true if (g_true is not None and not ridge) else gradient(x)

        step = 1.0
        while True:
            x_new = project_capped_simplex(x + step * g, domain)
            f_new = objective(x_new)
            if np.isfinite(f_new) and f_new >= fx + ARMIJO * float(g @ (x_new - x)):
                break
            step *= 0.5
            if step < MIN_STEP:
                x_new = None
                break
        if x_new is None:
            logger.debug("line search stalled at iteration %d", it)
            break
        # objective flat to rounding: further steps cannot tighten the certificate
        stall = stall + 1 if f_new - fx <= 4 * EPS * max(1.0, abs(fx)) else 0
        x, fx = x_new, f_new
        if stall >= STALL_ITERS:
            logger.debug("no progress for %d iterations at iteration %d", stall, it)
            break

    obj = logdet_weighted(V, x)
    if not converged and np.isfinite(obj):
        # evaluate the certificate at the final iterate too
        try:
            best_cert = min(best_cert, certificate_ub(x, V, domain))
        except SingularWeighting:
            pass
        converged = best_cert - obj <= tol * max(1.0, abs(obj))
    return RelaxSolution(x=x, obj_ln=obj, cert_ub_ln=float(best_cert), iters=it, converged=bool(converged), trace=trace)


def lp_projection_dominance(V, J, slack=1e-4, **opts):
    """Compare certified relaxation bounds on ``V`` and on its projection for ``J``.

    Returns
    -------
    ub_raw, ub_proj : float
        Certified natural-log upper bounds.
    holds : bool
        ``ub_proj <= ub_raw + slack``.
    """
    V = as_instance(V)
    J = check_index_set(J, V.n, max_size=V.r)
    raw = solve_lp_relaxation(V, J, **opts)
    state = project_rows(V, J)
    proj = solve_lp_relaxation(InstanceMatrix(state.tilde, check_rank=False), J, **opts)
    return raw.cert_ub_ln, proj.cert_ub_ln, bool(proj.cert_ub_ln <= raw.cert_ub_ln + slack)
