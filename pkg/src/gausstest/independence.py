"""Max-type independence test on Gaussianized scores."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_alpha, check_data_matrix, check_multiplier, check_same_rows
from .bootstrap import (DEFAULT_DRAWS, DEFAULT_MEMORY_BUDGET, KroneckerRows, aggregate,
                        aggregate_label, bootstrap_statistics, critical_value, p_value)
from .gaussianize import gaussianize_full


@dataclass
class TestReport:
    """Outcome of one test.

    ``argmax`` is the 0-based ``(j, k)`` pair of the largest absolute entry of
    the mean contribution vector (row-major Kronecker layout: entry
    ``j * q + k``).  ``reject`` is ``statistic > critical_value``.
    """

    test: str
    statistic: float
    critical_value: float
    p_value: float
    alpha: float
    reject: bool
    multiplier: str
    n_bootstrap: int
    aggregate: str
    argmax: tuple
    seed: int
    n: int
    p: int
    q: int
    m: int = 0
    extras: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        out = asdict(self)
        out["argmax"] = list(self.argmax)
        return out


def max_abs_cov_index(means, q: int = 1):
    """Locate the largest ``|means|`` entry, first occurrence on ties.

    ``means`` is a mean contribution vector in row-major Kronecker layout (or a
    ``p x q`` matrix).  Returns ``((j, k), value)`` with 0-based indices.
    """
    means = np.asarray(means, dtype=float)
    if means.ndim == 2:
        q = means.shape[1]
    flat = np.abs(means.ravel())
    idx = int(np.argmax(flat))
    return (idx // q, idx % q), float(flat[idx])


def kronecker_test(left, right, *, test, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS,
                   alpha=0.05, top_t=1, seed=0, n_jobs=1, systematic=False,
                   memory_budget=DEFAULT_MEMORY_BUDGET, m=0, extras=None) -> TestReport:
    """Statistic, bootstrap and decision for contributions ``left[i] (x) right[i]``."""
    n, p = left.shape
    q = right.shape[1]
    rows = KroneckerRows(left, right)
    means = rows.mean()
    statistic = float(math.sqrt(n) * aggregate(means, top_t))
    draws = bootstrap_statistics(rows, multiplier, n_bootstrap, top_t=top_t, seed=seed,
                                 n_jobs=n_jobs, systematic=systematic,
                                 memory_budget=memory_budget)
    cv = critical_value(draws, alpha)
    (j, k), _ = max_abs_cov_index(means, q)
    return TestReport(test=test, statistic=statistic, critical_value=cv,
                      p_value=p_value(draws, statistic), alpha=alpha,
                      reject=bool(statistic > cv), multiplier=multiplier,
                      n_bootstrap=draws.n_draws, aggregate=aggregate_label(top_t),
                      argmax=(j, k), seed=seed, n=n, p=p, q=q, m=m,
                      extras=dict(extras or {}))


def independence_test(x, y, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05,
                      top_t=1, seed=0, n_jobs=1, jitter=False, systematic=False,
                      memory_budget=DEFAULT_MEMORY_BUDGET) -> TestReport:
    """Test ``X`` independent of ``Y``.

    Both blocks are Gaussianized with full-sample ranks; the statistic is
    ``sqrt(n)`` times the aggregate of ``|mean_i U_i (x) V_i|`` and the
    critical value is the ``floor(N * alpha)``-th largest multiplier-bootstrap
    statistic.
    """
    check_multiplier(multiplier)
    alpha = check_alpha(alpha)
    x = check_data_matrix(x, "X")
    y = check_data_matrix(y, "Y")
    check_same_rows(x, y)
    u = gaussianize_full(x, jitter=jitter, seed=seed, block="X").scores
    v = gaussianize_full(y, jitter=jitter, seed=seed, block="Y").scores
    return kronecker_test(u, v, test="ind", multiplier=multiplier, n_bootstrap=n_bootstrap,
                          alpha=alpha, top_t=top_t, seed=seed, n_jobs=n_jobs,
                          systematic=systematic, memory_budget=memory_budget)


class _ReportMixin:
    def _store(self, report):
        self.report_ = report
        self.statistic_ = report.statistic
        self.critical_value_ = report.critical_value
        self.p_value_ = report.p_value
        self.reject_ = report.reject
        return self


class IndependenceTest(_ReportMixin, BaseEstimator):
    """Estimator wrapper around :func:`independence_test`.

    After ``fit(X, Y)`` the full result is in ``report_``; ``statistic_``,
    ``critical_value_``, ``p_value_`` and ``reject_`` are shortcuts.
    """

    def __init__(self, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05,
                 top_t=1, random_state=0, n_jobs=1, jitter=False):
        self.multiplier = multiplier
        self.n_bootstrap = n_bootstrap
        self.alpha = alpha
        self.top_t = top_t
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.jitter = jitter

    def fit(self, X, Y):
        report = independence_test(X, Y, multiplier=self.multiplier,
                                   n_bootstrap=self.n_bootstrap, alpha=self.alpha,
                                   top_t=self.top_t, seed=self.random_state,
                                   n_jobs=self.n_jobs, jitter=self.jitter)
        return self._store(report)
