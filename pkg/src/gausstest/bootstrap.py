"""Multiplier bootstrap for max-type statistics.

Draw ``b`` of a bootstrap run with seed ``s`` uses the random stream
``RandomStream(s, b)``, so the statistics do not depend on how the draws are
partitioned across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._normal import RandomStream, open_uniform, std_normal_quantile
from ._validation import check_multiplier
from .exceptions import ConfigurationError, DataError

SQRT5 = math.sqrt(5.0)
MAMMEN_HIGH = (1.0 + SQRT5) / 2.0
MAMMEN_LOW = (1.0 - SQRT5) / 2.0
MAMMEN_P_HIGH = (SQRT5 - 1.0) / (2.0 * SQRT5)

DEFAULT_DRAWS = 5000
MIN_DRAWS = 100
MAX_SYSTEMATIC_N = 20
DEFAULT_MEMORY_BUDGET = 200_000_000
_CHUNK_ENTRIES = 4_000_000


def sample_multipliers(kind: str, n: int, stream: RandomStream) -> np.ndarray:
    """``n`` i.i.d. multipliers of the given family from the start of ``stream``.

    All three families are generated from open uniforms, one per multiplier,
    so the first ``k`` values do not depend on ``n``.
    """
    check_multiplier(kind)
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    u = open_uniform(stream.generator(), n)
    return _from_uniforms(kind, u)


def _from_uniforms(kind, u):
    if kind == "rademacher":
        return np.where(u < 0.5, -1.0, 1.0)
    if kind == "mammen":
        return np.where(u < MAMMEN_P_HIGH, MAMMEN_HIGH, MAMMEN_LOW)
    return std_normal_quantile(u)


def multiplier_matrix(kind: str, n: int, seed: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the draw-by-observation multiplier matrix."""
    u = np.empty((stop - start, n))
    for r, b in enumerate(range(start, stop)):
        u[r] = open_uniform(RandomStream(seed, b).generator(), n)
    return _from_uniforms(kind, u)


def systematic_signs(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """All ``2**n`` Rademacher sign patterns; draw ``b`` has sign ``+1`` at
    observation ``i`` iff bit ``i`` of ``b`` is set."""
    stop = 2 ** n if stop is None else stop
    b = np.arange(start, stop, dtype=np.int64)[:, None]
    bits = (b >> np.arange(n, dtype=np.int64)[None, :]) & 1
    return np.where(bits == 1, 1.0, -1.0)


@dataclass(frozen=True)
class KroneckerRows:
    """Row-wise Kronecker products ``left[i] (x) right[i]`` kept in factored form.

    Column ``j * q + k`` of the implied ``n x (p*q)`` matrix is
    ``left[:, j] * right[:, k]``.
    """

    left: np.ndarray
    right: np.ndarray

    @property
    def shape(self):
        return (self.left.shape[0], self.left.shape[1] * self.right.shape[1])

    def materialize(self) -> np.ndarray:
        n = self.left.shape[0]
        return (self.left[:, :, None] * self.right[:, None, :]).reshape(n, -1)

    def mean(self) -> np.ndarray:
        n = self.left.shape[0]
        return (self.left.T @ self.right).ravel() / n


def aggregate(values: np.ndarray, top_t: int = 1) -> np.ndarray:
    """Max of ``|values|`` along the last axis, or the sum of the ``top_t`` largest."""
    a = np.abs(values)
    if top_t == 1:
        return a.max(axis=-1)
    d = a.shape[-1]
    return np.partition(a, d - top_t, axis=-1)[..., d - top_t:].sum(axis=-1)


def aggregate_label(top_t: int) -> str:
    return "max-abs" if top_t == 1 else f"top-T-sum({top_t})"


@dataclass(frozen=True)
class BootstrapDraws:
    """Bootstrap statistics of one run.

    ``stats[b]`` is the aggregate of draw ``b`` of
    ``n**-0.5 * sum_i w_i (row_i - mean)``.
    """

    stats: np.ndarray
    multiplier: str
    top_t: int = 1
    systematic: bool = False

    @property
    def n_draws(self) -> int:
        return int(self.stats.shape[0])

    @property
    def aggregate(self) -> str:
        return aggregate_label(self.top_t)


def _dense_chunk(centered, weights, top_t):
    n = centered.shape[0]
    return aggregate(weights @ centered / math.sqrt(n), top_t)


def _kron_chunk(left, right, sbar, weights, top_t):
    # xi_b = n^-1/2 [(L * w_b)^T R - (sum w_b) * Sbar]
    n, p = left.shape
    q = right.shape[1]
    c = weights.shape[0]
    lw = (weights[:, None, :] * left.T[None, :, :]).reshape(c * p, n)
    xi = (lw @ right).reshape(c, p * q) - weights.sum(axis=1)[:, None] * sbar[None, :]
    return aggregate(xi / math.sqrt(n), top_t)


def _make_kernel(rows, top_t, memory_budget):
    # returns (draw-chunk kernel, draws per chunk); chunk size depends on shape only
    n, d = rows.shape
    if isinstance(rows, KroneckerRows):
        if n * d > memory_budget:
            left, right, sbar = rows.left, rows.right, rows.mean()
            chunk = max(1, _CHUNK_ENTRIES // max(d, left.shape[1] * n))
            return (lambda w: _kron_chunk(left, right, sbar, w, top_t)), chunk
        rows = rows.materialize()
    centered = rows - rows.mean(axis=0)
    chunk = max(1, _CHUNK_ENTRIES // max(d, n))
    return (lambda w: _dense_chunk(centered, w, top_t)), chunk


def bootstrap_statistics(rows, kind: str = "rademacher", n_draws: int = DEFAULT_DRAWS,
                         top_t: int = 1, seed: int = 0, n_jobs: int = 1,
                         systematic: bool = False,
                         memory_budget: int = DEFAULT_MEMORY_BUDGET) -> BootstrapDraws:
    """Multiplier-bootstrap statistics for the mean of ``rows``.

    Parameters
    ----------
    rows : ndarray of shape (n, d) or KroneckerRows
        Per-observation contribution vectors.
    kind : {"rademacher", "mammen", "gaussian"}
    n_draws : int
        Number of draws ``N``; at least 100 unless ``systematic``.
    top_t : int
        Aggregate; 1 is the max of absolute values, larger values sum the
        ``top_t`` largest absolute entries.
    seed : int
        Draw ``b`` uses ``RandomStream(seed, b)``.
    n_jobs : int
        Worker threads. Draws are cut into chunks whose size depends only on
        the data shape, so the output is identical for any ``n_jobs``.
    systematic : bool
        Enumerate all ``2**n`` Rademacher sign patterns instead of sampling;
        ``n_draws`` is then ignored.
    memory_budget : int
        Above ``n * d`` entries, factored Kronecker rows are never materialized.
    """
    check_multiplier(kind)
    if isinstance(rows, KroneckerRows):
        n, d = rows.shape
    else:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2:
            raise DataError("rows must be a two-dimensional array")
        n, d = rows.shape
    if d < 1 or n < 1:
        raise DataError("rows must have at least one observation and one coordinate")
    if not 1 <= top_t <= d:
        raise ConfigurationError(f"top_t must lie in [1, {d}], got {top_t}")
    if systematic:
        if kind != "rademacher":
            raise ConfigurationError("systematic enumeration requires rademacher multipliers")
        if n > MAX_SYSTEMATIC_N:
            raise ConfigurationError(f"systematic enumeration supports n <= {MAX_SYSTEMATIC_N}")
        n_draws = 2 ** n
    elif n_draws < MIN_DRAWS:
        raise ConfigurationError(f"need at least {MIN_DRAWS} bootstrap draws, got {n_draws}")

    kernel, chunk = _make_kernel(rows, top_t, memory_budget)

    stats = np.empty(n_draws)

    def work(start):
        stop = min(start + chunk, n_draws)
        if systematic:
            w = systematic_signs(n, start, stop)
        else:
            w = multiplier_matrix(kind, n, seed, start, stop)
        stats[start:stop] = kernel(w)

    starts = range(0, n_draws, chunk)
    if n_jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return BootstrapDraws(stats=stats, multiplier=kind, top_t=top_t, systematic=systematic)


def _order_index(n_draws, alpha):
    return math.floor(n_draws * Fraction(repr(float(alpha))))


def critical_value(draws: BootstrapDraws, alpha: float) -> float:
    """The ``floor(N * alpha)``-th largest bootstrap statistic.

    ``alpha`` is read as the decimal it prints as, so ``N * alpha`` is not
    disturbed by binary rounding (e.g. ``0.29 * 100`` gives 29, not 28).
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    k = _order_index(draws.n_draws, alpha)
    if k < 1:
        raise ConfigurationError(
            f"floor(N * alpha) = 0 for N = {draws.n_draws}, alpha = {alpha}; increase N")
    return float(np.sort(draws.stats)[::-1][k - 1])


def p_value(draws: BootstrapDraws, observed: float) -> float:
    """Add-one bootstrap p-value ``(1 + #{stats >= observed}) / (N + 1)``."""
    if not math.isfinite(observed):
        raise DataError("observed statistic must be finite")
    return (1.0 + np.count_nonzero(draws.stats >= observed)) / (draws.n_draws + 1.0)


def prefix_bootstrap_statistics(rows, kind: str = "rademacher", n_draws: int = DEFAULT_DRAWS,
                                top_t: int = 1, seed: int = 0, lengths=None) -> np.ndarray:
    """Bootstrap statistics of every leading block ``rows[:l]``.

    Returns an array of shape ``(len(lengths), n_draws)`` whose row for ``l``
    has the law of ``bootstrap_statistics(rows[:l], ...).stats`` and uses the
    same multipliers (the first ``l`` of each draw).  Running sums make the
    whole sweep cost about as much as one full-length run.
    """
    check_multiplier(kind)
    rows = np.asarray(rows, dtype=float)
    n, d = rows.shape
    lengths = np.arange(1, n + 1) if lengths is None else np.asarray(lengths, dtype=int)
    if lengths.size and (lengths.min() < 1 or lengths.max() > n):
        raise ConfigurationError(f"prefix lengths must lie in [1, {n}]")
    if not 1 <= top_t <= d:
        raise ConfigurationError(f"top_t must lie in [1, {d}], got {top_t}")
    if n_draws < MIN_DRAWS:
        raise ConfigurationError(f"need at least {MIN_DRAWS} bootstrap draws, got {n_draws}")
    want = np.zeros(n + 1, dtype=bool)
    want[lengths] = True
    cum_rows = np.cumsum(rows, axis=0)
    out = np.empty((n + 1, n_draws))
    chunk = max(1, _CHUNK_ENTRIES // max(d, n))
    for start in range(0, n_draws, chunk):
        stop = min(start + chunk, n_draws)
        w = multiplier_matrix(kind, n, seed, start, stop)
        acc = np.zeros((stop - start, d))
        wsum = np.zeros(stop - start)
        for i in range(n):
            acc += np.outer(w[:, i], rows[i])
            wsum += w[:, i]
            ell = i + 1
            if want[ell]:
                xi = acc - np.outer(wsum, cum_rows[i] / ell)
                out[ell, start:stop] = aggregate(xi / math.sqrt(ell), top_t)
    return out[lengths]
