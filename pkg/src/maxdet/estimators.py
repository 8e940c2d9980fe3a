"""scikit-learn compatible wrappers.

``IndependentColumns`` is a regular column-selecting transformer and can sit
in a ``Pipeline`` ahead of the row selectors. ``MaxDetSelector`` and
``LogDetRelaxation`` select or weight *rows* (observations), so they expose
``fit`` plus fitted attributes rather than ``transform``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bnb import DEFAULT_EPS_OPT, DEFAULT_TIME_LIMIT, solve
from .io import select_independent_columns
from .linalg import InstanceMatrix, log2_abs_det
from .relax import solve_lp_relaxation
from .report import LN2


class IndependentColumns(TransformerMixin, BaseEstimator):
    """Keep a maximal linearly independent subset of the input columns.

    Parameters
    ----------
    tol : float, default=1e-10
        Relative pivot threshold of the column-pivoted QR factorization.

    Attributes
    ----------
    support_ : ndarray of int
        Kept column indices, ascending.
    n_features_in_ : int
    """

    def __init__(self, tol=1e-10):
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.support_ = select_independent_columns(X, self.tol)
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X[:, self.support_]

    def get_support(self, indices=False):
        check_is_fitted(self, "support_")
        if indices:
            return self.support_.copy()
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.support_] = True
        return mask


class MaxDetSelector(BaseEstimator):
    """Exact maximum-determinant choice of ``r = n_features`` rows of ``X``.

    Parameters
    ----------
    fixed : sequence of int, default=()
        Rows that must be part of the selection.
    time_limit : float, default=600
    eps_opt : float, default=1e-9
        Optimality tolerance on ``log2 det``.

    Attributes
    ----------
    subset_ : tuple of int
    lower_bound_, upper_bound_ : float
        ``log2 det(X_S X_S^T)`` of the incumbent and the certified bound.
    optimal_ : bool
    report_ : SolveReport
    """

    def __init__(self, fixed=(), time_limit=DEFAULT_TIME_LIMIT, eps_opt=DEFAULT_EPS_OPT):
        self.fixed = fixed
        self.time_limit = time_limit
        self.eps_opt = eps_opt

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        self.n_features_in_ = X.shape[1]
        rep = solve(InstanceMatrix(X), self.fixed, time_limit=self.time_limit, eps_opt=self.eps_opt)
        self.report_ = rep
        self.subset_ = rep.subset
        self.lower_bound_ = rep.lb_log2
        self.upper_bound_ = rep.ub_log2
        self.optimal_ = rep.optimal
        self.n_samples_fit_ = X.shape[0]
        return self

    def get_support(self, indices=False):
        check_is_fitted(self, "subset_")
        if indices:
            return np.array(self.subset_, dtype=int)
        mask = np.zeros(self.n_samples_fit_, dtype=bool)
        mask[list(self.subset_)] = True
        return mask

    def score(self, X, y=None):
        """Natural-log ``det`` of the Gram matrix of the selected rows of ``X``."""
        check_is_fitted(self, "subset_")
        X = check_array(X, dtype=float)
        return 2.0 * log2_abs_det(X, self.subset_) * LN2


class LogDetRelaxation(BaseEstimator):
    """Fractional row weights maximizing ``log det(X^T Diag(w) X)``.

    Attributes
    ----------
    weights_ : ndarray of shape (n_samples,)
    objective_ : float
        Natural-log objective at ``weights_``.
    upper_bound_ : float
        Certified natural-log bound on the relaxed and the integer optimum.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, fixed=(), tol=1e-6, max_iters=5000):
        self.fixed = fixed
        self.tol = tol
        self.max_iters = max_iters

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        sol = solve_lp_relaxation(InstanceMatrix(X), self.fixed, tol=self.tol, max_iters=self.max_iters)
        self.weights_ = sol.x
        self.objective_ = sol.obj_ln
        self.upper_bound_ = sol.cert_ub_ln
        self.n_iter_ = sol.iters
        self.converged_ = sol.converged
        return self
