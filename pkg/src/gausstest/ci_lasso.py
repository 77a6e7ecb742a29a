"""Conditional independence test with Lasso residuals."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_alpha, check_data_matrix, check_multiplier, check_same_rows
from .bootstrap import DEFAULT_DRAWS, DEFAULT_MEMORY_BUDGET
from .gaussianize import gaussianize_full
from .independence import TestReport, _ReportMixin, kronecker_test
from .lasso import TOL, coordinate_descent, lambda_max, lasso_cv_multi


def lasso_residuals(u, v, w, folds=10, grid_size=100, seed=0, lambda_override=None, tol=TOL):
    """Residuals of every column of ``u`` and ``v`` regressed on ``w``.

    With ``lambda_override`` the same fixed penalty is used for every column;
    ``"max"`` means each column's own ``lam_max`` (all-zero fits).
    Returns ``(eps, delta, lambdas)``.
    """
    resp = np.hstack([u, v])
    n, m = w.shape
    if m == 0:
        return u.copy(), v.copy(), np.zeros(resp.shape[1])
    if lambda_override is None:
        fits = lasso_cv_multi(w, resp, folds=folds, grid_size=grid_size, seed=seed, tol=tol)
        beta = np.column_stack([f.coefficients for f in fits])
        lams = np.array([f.lam for f in fits])
    else:
        if isinstance(lambda_override, str) and lambda_override == "max":
            lams = lambda_max(w, resp)
        else:
            lams = np.full(resp.shape[1], float(lambda_override))
        beta, _, _, _ = coordinate_descent(w.T @ w / n, w.T @ resp / n, lams, tol=tol)
    resid = resp - w @ beta
    p = u.shape[1]
    return resid[:, :p], resid[:, p:], lams


def ci_lasso_test(x, y, z, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05,
                  top_t=1, seed=0, n_jobs=1, lambda_override=None, folds=10, grid_size=100,
                  lasso_tol=TOL, jitter=False,
                  memory_budget=DEFAULT_MEMORY_BUDGET) -> TestReport:
    """Test ``X`` independent of ``Y`` given ``Z`` through linear residuals.

    All three blocks get full-sample normal scores.  Every column of the X and
    Y scores is regressed on the Z scores by a cross-validated Lasso (one CV per
    column), and the max-type test is applied to the residual products
    ``eps_i (x) delta_i``.  An empty ``z`` gives the unconditional test.
    """
    check_multiplier(multiplier)
    alpha = check_alpha(alpha)
    eps, delta, lams, m = ci_lasso_residuals(x, y, z, seed=seed, lambda_override=lambda_override,
                                             folds=folds, grid_size=grid_size,
                                             lasso_tol=lasso_tol, jitter=jitter)
    p = eps.shape[1]
    extras = {"lambda_x": lams[:p].tolist(), "lambda_y": lams[p:].tolist()}
    return kronecker_test(eps, delta, test="ci-lasso", multiplier=multiplier,
                          n_bootstrap=n_bootstrap, alpha=alpha, top_t=top_t, seed=seed,
                          n_jobs=n_jobs, memory_budget=memory_budget, m=m, extras=extras)


def ci_lasso_residuals(x, y, z, seed=0, lambda_override=None, folds=10, grid_size=100,
                       lasso_tol=TOL, jitter=False):
    """Gaussianize the three blocks and return ``(eps, delta, lambdas, m)``."""
    x = check_data_matrix(x, "X")
    y = check_data_matrix(y, "Y")
    z = check_data_matrix(z, "Z", allow_empty_columns=True)
    check_same_rows(x, y, z)
    u = gaussianize_full(x, jitter=jitter, seed=seed, block="X").scores
    v = gaussianize_full(y, jitter=jitter, seed=seed, block="Y").scores
    if z.shape[1]:
        w = gaussianize_full(z, jitter=jitter, seed=seed, block="Z").scores
    else:
        w = z
    eps, delta, lams = lasso_residuals(u, v, w, folds, grid_size, seed, lambda_override, lasso_tol)
    return eps, delta, lams, w.shape[1]


class CILassoTest(_ReportMixin, BaseEstimator):
    """Estimator wrapper around :func:`ci_lasso_test`; ``fit(X, Y, Z)``."""

    def __init__(self, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05, top_t=1,
                 random_state=0, n_jobs=1, lambda_override=None, folds=10, grid_size=100):
        self.multiplier = multiplier
        self.n_bootstrap = n_bootstrap
        self.alpha = alpha
        self.top_t = top_t
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.lambda_override = lambda_override
        self.folds = folds
        self.grid_size = grid_size

    def fit(self, X, Y, Z):
        report = ci_lasso_test(X, Y, Z, multiplier=self.multiplier,
                               n_bootstrap=self.n_bootstrap, alpha=self.alpha,
                               top_t=self.top_t, seed=self.random_state, n_jobs=self.n_jobs,
                               lambda_override=self.lambda_override, folds=self.folds,
                               grid_size=self.grid_size)
        return self._store(report)
