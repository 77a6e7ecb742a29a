"""Conditional independence test with network residuals on a three-way split.

Rows are split into ``D1`` (reference sample for the truncated ECDF scores),
``D2`` (network training) and a remainder block whose first ``n3`` rows form
``D3``, on which the statistic ``sqrt(n3) |mean eps_i (x) delta_i|_inf`` is
computed.  :func:`select_n3` chooses ``n3`` by a parametric bootstrap sweep.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from ._normal import RandomStream, derive_seed, standard_normal, std_normal_quantile
from ._validation import check_alpha, check_data_matrix, check_multiplier, check_same_rows
from .bootstrap import (DEFAULT_DRAWS, DEFAULT_MEMORY_BUDGET, KroneckerRows, aggregate,
                        critical_value, BootstrapDraws, prefix_bootstrap_statistics)
from .exceptions import ConfigurationError
from .fnn import FnnConfig, default_truncation, predict_many, train_many
from .gaussianize import gaussianize_truncated
from .independence import TestReport, _ReportMixin, kronecker_test

MIN_ROWS = 12
AUTO_REMAINDER_N = 200
DEFAULT_B = 500
DEFAULT_REFIT_BUDGET = 20_000


@dataclass(frozen=True)
class SplitPlan:
    """Row indices of the three parts; ``d3`` is the first ``n3`` rows of ``pool``."""

    d1: np.ndarray
    d2: np.ndarray
    pool: np.ndarray
    n3: int

    @property
    def d3(self) -> np.ndarray:
        return self.pool[:self.n3]

    @property
    def n1(self) -> int:
        return int(self.d1.size)

    @property
    def n2(self) -> int:
        return int(self.d2.size)


def make_split_plan(n: int, n3: int | None = None, shuffle: bool = False, seed: int = 0,
                    no_split: bool = False) -> SplitPlan:
    """Contiguous split with ``n1 = n // 3`` and ``n2 = n // 2``.

    ``n3=None`` takes the whole remainder.  ``shuffle`` permutes the rows with
    a seeded stream first.  ``no_split`` uses all rows for every part.
    """
    rows = np.arange(n)
    if no_split:
        if n < 3:
            raise ConfigurationError("need at least 3 rows")
        k = n if n3 is None else n3
        if not 1 <= k <= n:
            raise ConfigurationError(f"n3 must lie in [1, {n}], got {k}")
        return SplitPlan(rows, rows, rows, k)
    if n < MIN_ROWS:
        raise ConfigurationError(f"the three-way split needs n >= {MIN_ROWS}, got {n}")
    if shuffle:
        rows = RandomStream(seed).child(1).generator().permutation(n)
    n1, n2 = n // 3, n // 2
    pool = rows[n1 + n2:]
    k = pool.size if n3 is None else int(n3)
    if not 1 <= k <= pool.size:
        raise ConfigurationError(f"n3 must lie in [1, {pool.size}], got {k}")
    return SplitPlan(rows[:n1], rows[n1:n1 + n2], pool, k)


def fnn_regressor(config: FnnConfig, beta_trunc: float):
    """Regression hook training one network per target column."""

    def fit(w_train, targets, stream_seed):
        cfg = replace(config, seed=stream_seed)
        models = train_many(w_train, targets, cfg, beta_trunc=beta_trunc).models
        return lambda w: predict_many(models, w)

    return fit


def zero_regressor(w_train, targets, stream_seed):
    """Regression hook returning the zero function (for cross-checks)."""
    r = targets.shape[1]
    return lambda w: np.zeros((np.asarray(w).shape[0], r))


@dataclass
class N3Selection:
    n3: int
    candidates: np.ndarray
    abar: np.ndarray
    stride: int = 1


def _closest_to_alpha(candidates, abar, alpha):
    # first (smallest) candidate on ties
    gap = np.abs(np.asarray(abar) - alpha)
    return int(candidates[int(np.argmin(gap))])


def select_n3(w_hat, eps, delta, predict, fit, plan: SplitPlan, B: int = DEFAULT_B,
              alpha: float = 0.05, seed: int = 0, multiplier: str = "rademacher",
              n_bootstrap: int = DEFAULT_DRAWS, top_t: int = 1,
              refit_budget: int = DEFAULT_REFIT_BUDGET, stride: int = 5,
              n_jobs: int = 1) -> N3Selection:
    """Parametric-bootstrap choice of ``n3``.

    For each of ``B`` repetitions the rows of ``w_hat``, ``eps`` and ``delta``
    (all ``n`` rows) are mixed with independent ``N(0, 1/n)`` weights, responses
    are rebuilt through ``predict`` and clamped at ``Phi^-1(1 - 1/n1)``, the
    regressions are refit on the ``D2`` rows, and for every candidate length
    ``l`` the test on the first ``l`` remainder rows is run.  The candidate
    whose rejection frequency is closest to ``alpha`` wins, the smallest on ties.

    When ``B * (p + q)`` exceeds ``refit_budget`` a warning is issued and only
    every ``stride``-th candidate length is evaluated.
    """
    if B < 1:
        raise ConfigurationError("B must be at least 1")
    n = w_hat.shape[0]
    p, q = eps.shape[1], delta.shape[1]
    pool = plan.pool
    n_pool = pool.size
    step = 1
    if B * (p + q) > refit_budget:
        step = max(1, int(stride))
        warnings.warn(f"B * (p + q) = {B * (p + q)} network refits exceeds the budget "
                      f"{refit_budget}; evaluating every {step}-th n3 candidate",
                      RuntimeWarning, stacklevel=2)
    candidates = np.arange(1, n_pool + 1, step)
    m1 = std_normal_quantile(1.0 - 1.0 / plan.n1)
    hits = np.zeros((B, candidates.size))
    scale = 1.0 / math.sqrt(n)

    def one(b):
        gen = RandomStream(seed, b + 1).child(0).generator()
        mix = standard_normal(gen, (3, n, n)) * scale
        wb = mix[0] @ w_hat
        ub = predict(wb)
        vb = ub[:, p:] + mix[2] @ delta
        ub = ub[:, :p] + mix[1] @ eps
        ub, vb, wb = (np.clip(a, -m1, m1) for a in (ub, vb, wb))
        targets = np.hstack([ub, vb])
        refit = fit(wb[plan.d2], targets[plan.d2], derive_seed(seed, 3, b))
        resid = targets[pool] - refit(wb[pool])
        rows = KroneckerRows(resid[:, :p], resid[:, p:]).materialize()
        boot = prefix_bootstrap_statistics(rows, multiplier, n_bootstrap, top_t,
                                           seed=derive_seed(seed, 2, b), lengths=candidates)
        csum = np.cumsum(rows, axis=0)
        for c, ell in enumerate(candidates):
            stat = math.sqrt(ell) * aggregate(csum[ell - 1] / ell, top_t)
            cv = critical_value(BootstrapDraws(boot[c], multiplier, top_t), alpha)
            hits[b, c] = stat > cv

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool_ex:
            list(pool_ex.map(one, range(B)))
    else:
        for b in range(B):
            one(b)
    abar = hits.mean(axis=0)
    return N3Selection(_closest_to_alpha(candidates, abar, alpha), candidates, abar, step)


def write_curve(path, selection: N3Selection):
    """Dump the candidate lengths and rejection frequencies as CSV."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["n3", "abar", "selected"])
        for ell, a in zip(selection.candidates, selection.abar):
            out.writerow([int(ell), repr(float(a)), int(ell == selection.n3)])


def _parse_n3_mode(n3_mode, n):
    if n3_mode in (None, "auto"):
        return ("remainder", None) if n >= AUTO_REMAINDER_N else ("algorithm1", DEFAULT_B)
    if n3_mode == "remainder":
        return ("remainder", None)
    if n3_mode == "algorithm1":
        return ("algorithm1", DEFAULT_B)
    if isinstance(n3_mode, tuple) and n3_mode[0] == "algorithm1":
        return ("algorithm1", int(n3_mode[1]))
    if isinstance(n3_mode, (int, np.integer)) and not isinstance(n3_mode, bool):
        return ("fixed", int(n3_mode))
    raise ConfigurationError(f"unknown n3 mode {n3_mode!r}")


def ci_fnn_test(x, y, z, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05,
                top_t=1, seed=0, n_jobs=1, n3_mode="auto", fnn_config: FnnConfig | None = None,
                no_split=False, shuffle_split=False, regressor=None, refit_budget=DEFAULT_REFIT_BUDGET,
                stride=5, curve_path=None, algorithm1_bootstrap=None,
                memory_budget=DEFAULT_MEMORY_BUDGET) -> TestReport:
    """Test ``X`` independent of ``Y`` given ``Z`` through network residuals.

    Parameters
    ----------
    n3_mode : "auto", "remainder", int, "algorithm1" or ("algorithm1", B)
        How many remainder rows the statistic uses.  ``"auto"`` takes the
        whole remainder when ``n >= 200`` and runs :func:`select_n3` with
        ``B = 500`` otherwise.
    fnn_config : FnnConfig, optional
        Network settings; the truncation level defaults to
        ``log(n) sqrt(log(max(p, q, m) n))``.
    no_split : bool
        Use all rows for the scores, the fits and the statistic.
    regressor : callable, optional
        ``regressor(w_train, targets, seed) -> predict`` replacing the networks.
    algorithm1_bootstrap : int, optional
        Bootstrap draws inside :func:`select_n3` (defaults to ``n_bootstrap``).
    """
    check_multiplier(multiplier)
    alpha = check_alpha(alpha)
    x = check_data_matrix(x, "X")
    y = check_data_matrix(y, "Y")
    z = check_data_matrix(z, "Z", allow_empty_columns=True)
    n = check_same_rows(x, y, z)
    p, q, m = x.shape[1], y.shape[1], z.shape[1]
    mode, arg = _parse_n3_mode(n3_mode, n)
    plan = make_split_plan(n, arg if mode == "fixed" else None, shuffle_split, seed, no_split)

    ref = plan.d1
    u = gaussianize_truncated(x, x[ref], block="X", reference_rows=ref).scores
    v = gaussianize_truncated(y, y[ref], block="Y", reference_rows=ref).scores
    w = gaussianize_truncated(z, z[ref], block="Z", reference_rows=ref).scores if m else z

    config = fnn_config or FnnConfig()
    beta = config.beta_trunc if config.beta_trunc is not None else default_truncation(n, p, q, m)
    fit = regressor or fnn_regressor(config, beta)
    targets = np.hstack([u, v])
    predict = fit(w[plan.d2], targets[plan.d2], seed)
    resid = targets - predict(w)
    eps, delta = resid[:, :p], resid[:, p:]

    extras = {"n1": plan.n1, "n2": plan.n2, "n3_mode": mode, "beta_trunc": beta}
    if mode == "algorithm1":
        sel = select_n3(w, eps, delta, predict, fit, plan, B=arg, alpha=alpha, seed=seed,
                        multiplier=multiplier, n_bootstrap=algorithm1_bootstrap or n_bootstrap,
                        top_t=top_t, refit_budget=refit_budget, stride=stride, n_jobs=n_jobs)
        plan = replace(plan, n3=sel.n3)
        extras["abar"] = sel.abar.tolist()
        extras["n3_candidates"] = sel.candidates.tolist()
        if curve_path is not None:
            write_curve(curve_path, sel)
    extras["n3"] = plan.n3
    d3 = plan.d3
    return kronecker_test(eps[d3], delta[d3], test="ci-fnn", multiplier=multiplier,
                          n_bootstrap=n_bootstrap, alpha=alpha, top_t=top_t, seed=seed,
                          n_jobs=n_jobs, memory_budget=memory_budget, m=m, extras=extras)


class CIFNNTest(_ReportMixin, BaseEstimator):
    """Estimator wrapper around :func:`ci_fnn_test`; ``fit(X, Y, Z)``."""

    def __init__(self, multiplier="rademacher", n_bootstrap=DEFAULT_DRAWS, alpha=0.05, top_t=1,
                 random_state=0, n_jobs=1, n3_mode="auto", fnn_config=None, no_split=False,
                 shuffle_split=False):
        self.multiplier = multiplier
        self.n_bootstrap = n_bootstrap
        self.alpha = alpha
        self.top_t = top_t
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.n3_mode = n3_mode
        self.fnn_config = fnn_config
        self.no_split = no_split
        self.shuffle_split = shuffle_split

    def fit(self, X, Y, Z):
        report = ci_fnn_test(X, Y, Z, multiplier=self.multiplier, n_bootstrap=self.n_bootstrap,
                             alpha=self.alpha, top_t=self.top_t, seed=self.random_state,
                             n_jobs=self.n_jobs, n3_mode=self.n3_mode,
                             fnn_config=self.fnn_config, no_split=self.no_split,
                             shuffle_split=self.shuffle_split)
        return self._store(report)
