"""Lasso by cyclic coordinate descent, with K-fold cross-validated penalty.

The objective is ``(1/n) |y - W b|^2 + 2 * lam * |b|_1`` with no intercept and
no column scaling.  All solvers work on the Gram form ``G = W'W/n``,
``c = W'y/n`` and update many responses at once, each with its own penalty.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._normal import RandomStream
from ._validation import check_data_matrix
from .exceptions import ConfigurationError, DataError

TOL = 1e-7
MAX_SWEEPS = 10_000


class LassoConvergenceWarning(UserWarning):
    pass


@dataclass
class LassoFit:
    coefficients: np.ndarray
    lam: float
    objective: float
    iterations: int
    converged: bool = True
    cv_table: list | None = None
    objective_path: list = field(default_factory=list)


def lambda_max(design, response) -> np.ndarray:
    """Smallest penalty with an all-zero solution, per response column."""
    design = np.asarray(design, dtype=float)
    c = design.T @ np.asarray(response, dtype=float) / design.shape[0]
    return np.abs(c).max(axis=0) if design.shape[1] else np.zeros(c.shape[1:])


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _objective(yy, c, gram, beta, lam):
    # (1/n)|y - Wb|^2 + 2 lam |b|_1 from the Gram form, one value per column
    quad = yy - 2.0 * np.einsum("vr,vr->r", c, beta) + np.einsum("vr,vr->r", beta, gram @ beta)
    return quad + 2.0 * lam * np.abs(beta).sum(axis=0)


def coordinate_descent(gram, c, lam, beta=None, tol=TOL, max_sweeps=MAX_SWEEPS,
                       yy=None, track=False):
    """Solve many Lasso problems sharing one Gram matrix.

    Parameters
    ----------
    gram : ndarray (m, m)
        ``W'W / n``.
    c : ndarray (m, r)
        ``W'Y / n``.
    lam : ndarray (r,)
        Penalty per response column.
    beta : ndarray (m, r), optional
        Warm start; modified in place.

    Returns
    -------
    beta, sweeps (per column), converged (per column), objective path
    """
    m, r = c.shape
    beta = np.zeros((m, r)) if beta is None else beta
    sweeps = np.zeros(r, dtype=int)
    active = np.ones(r, dtype=bool)
    path = []
    if track:
        path.append(_objective(yy, c, gram, beta, lam))
    diag = np.diag(gram)
    # gradient-side quantity c - G beta, kept up to date
    resid = c - gram @ beta
    for _ in range(max_sweeps):
        if not active.any():
            break
        cols = np.flatnonzero(active)
        biggest = np.zeros(cols.size)
        for v in range(m):
            if diag[v] <= 0.0:
                continue
            old = beta[v, cols]
            rho = resid[v, cols] + diag[v] * old
            new = _soft(rho, lam[cols]) / diag[v]
            step = new - old
            if np.any(step):
                beta[v, cols] = new
                resid[:, cols] -= np.outer(gram[:, v], step)
                np.maximum(biggest, np.abs(step), out=biggest)
        sweeps[cols] += 1
        if track:
            path.append(_objective(yy, c, gram, beta, lam))
        active[cols[biggest < tol]] = False
    return beta, sweeps, ~active, path


def lasso_fit(design, response, lam, tol=TOL, max_sweeps=MAX_SWEEPS) -> LassoFit:
    """Fit the Lasso at a fixed penalty ``lam``.

    Convergence means the largest coordinate update of a sweep falls below
    ``tol``; otherwise a :class:`LassoConvergenceWarning` is issued and
    ``converged`` is False.
    """
    w = check_data_matrix(design, "design", min_samples=2, allow_empty_columns=True)
    y = check_data_matrix(response, "response", min_samples=2)
    if y.shape[1] != 1:
        raise DataError("lasso_fit takes a single response vector")
    if w.shape[0] != y.shape[0]:
        raise DataError("design and response have different numbers of rows")
    if lam < 0:
        raise ConfigurationError("lam must be nonnegative")
    n = w.shape[0]
    gram = w.T @ w / n
    c = w.T @ y / n
    yy = np.array([float(y[:, 0] @ y[:, 0]) / n])
    beta, sweeps, conv, path = coordinate_descent(gram, c, np.array([float(lam)]), tol=tol,
                                                  max_sweeps=max_sweeps, yy=yy, track=True)
    if not conv[0]:
        warnings.warn(f"lasso did not converge in {max_sweeps} sweeps", LassoConvergenceWarning,
                      stacklevel=2)
    return LassoFit(coefficients=beta[:, 0], lam=float(lam), objective=float(path[-1][0]),
                    iterations=int(sweeps[0]), converged=bool(conv[0]),
                    objective_path=[float(o[0]) for o in path])


def fold_assignment(n, folds, seed) -> np.ndarray:
    """Fold label of each row: a seeded permutation cut into near-equal parts."""
    perm = RandomStream(seed).generator().permutation(n)
    labels = np.empty(n, dtype=int)
    for f, part in enumerate(np.array_split(perm, folds)):
        labels[part] = f
    return labels


def lambda_grid(lmax, grid_size):
    """Descending log-spaced grid from ``lmax`` to ``1e-3 * lmax`` per column."""
    ratios = np.logspace(0.0, -3.0, grid_size)
    return np.outer(ratios, np.atleast_1d(lmax))


def _path_errors(w_tr, y_tr, w_te, y_te, grid, tol, max_sweeps):
    n_tr = w_tr.shape[0]
    gram = w_tr.T @ w_tr / n_tr
    c = w_tr.T @ y_tr / n_tr
    beta = np.zeros((w_tr.shape[1], y_tr.shape[1]))
    sse = np.empty(grid.shape)
    for g in range(grid.shape[0]):
        beta, _, _, _ = coordinate_descent(gram, c, grid[g], beta, tol, max_sweeps)
        sse[g] = ((y_te - w_te @ beta) ** 2).sum(axis=0)
    return sse


def lasso_cv_multi(design, responses, folds=10, grid_size=100, seed=0, tol=TOL,
                   max_sweeps=MAX_SWEEPS) -> list[LassoFit]:
    """Cross-validated Lasso for every column of ``responses`` on one design.

    Each column gets its own grid ``lam_max * logspace(0, -3, grid_size)``.
    The held-out error is the squared error pooled over all folds divided by
    ``n``; ties go to the larger penalty.  The chosen penalty is refit on all
    rows.
    """
    w = check_data_matrix(design, "design", min_samples=2, allow_empty_columns=True)
    y = check_data_matrix(responses, "responses", min_samples=2)
    n, m = w.shape
    if y.shape[0] != n:
        raise DataError("design and responses have different numbers of rows")
    if folds < 2:
        raise ConfigurationError("folds must be at least 2")
    if n < folds:
        raise ConfigurationError(f"n = {n} is smaller than the number of folds {folds}")
    r = y.shape[1]
    if m == 0:
        yy = (y ** 2).sum(axis=0) / n
        return [LassoFit(np.zeros(0), 0.0, float(yy[j]), 0) for j in range(r)]
    grid = lambda_grid(lambda_max(w, y), grid_size)
    labels = fold_assignment(n, folds, seed)
    sse = np.zeros(grid.shape)
    for f in range(folds):
        te = labels == f
        sse += _path_errors(w[~te], y[~te], w[te], y[te], grid, tol, max_sweeps)
    cv_err = sse / n
    best = np.argmin(cv_err, axis=0)
    lam = grid[best, np.arange(r)]
    gram = w.T @ w / n
    c = w.T @ y / n
    yy = (y ** 2).sum(axis=0) / n
    beta, sweeps, conv, _ = coordinate_descent(gram, c, lam, tol=tol, max_sweeps=max_sweeps)
    if not conv.all():
        warnings.warn(f"lasso refit did not converge for {int((~conv).sum())} columns",
                      LassoConvergenceWarning, stacklevel=2)
    obj = _objective(yy, c, gram, beta, lam)
    return [LassoFit(coefficients=beta[:, j].copy(), lam=float(lam[j]), objective=float(obj[j]),
                     iterations=int(sweeps[j]), converged=bool(conv[j]),
                     cv_table=list(zip(grid[:, j].tolist(), cv_err[:, j].tolist())))
            for j in range(r)]


def lasso_cv(design, response, folds=10, grid_size=100, seed=0, tol=TOL,
             max_sweeps=MAX_SWEEPS) -> LassoFit:
    """Single-response form of :func:`lasso_cv_multi`."""
    y = check_data_matrix(response, "response", min_samples=2)
    if y.shape[1] != 1:
        raise DataError("lasso_cv takes a single response vector")
    return lasso_cv_multi(design, y, folds, grid_size, seed, tol, max_sweeps)[0]


class LassoCD(RegressorMixin, BaseEstimator):
    """Fixed-penalty Lasso (``(1/n)|y - Xb|^2 + 2 lam |b|_1``, no intercept)."""

    def __init__(self, lam=1.0, tol=TOL, max_sweeps=MAX_SWEEPS):
        self.lam = lam
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y):
        self.fit_ = lasso_fit(X, y, self.lam, self.tol, self.max_sweeps)
        self.coef_ = self.fit_.coefficients
        self.n_features_in_ = self.coef_.shape[0]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_data_matrix(X, min_samples=1, allow_empty_columns=True) @ self.coef_


class LassoCVCD(LassoCD):
    """Lasso with the penalty chosen by seeded K-fold cross-validation."""

    def __init__(self, folds=10, grid_size=100, random_state=0, tol=TOL, max_sweeps=MAX_SWEEPS):
        self.folds = folds
        self.grid_size = grid_size
        self.random_state = random_state
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y):
        self.fit_ = lasso_cv(X, y, self.folds, self.grid_size, self.random_state, self.tol,
                             self.max_sweeps)
        self.coef_ = self.fit_.coefficients
        self.lam_ = self.fit_.lam
        self.cv_table_ = self.fit_.cv_table
        self.n_features_in_ = self.coef_.shape[0]
        return self
