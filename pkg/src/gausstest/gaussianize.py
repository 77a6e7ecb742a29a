"""Coordinatewise Gaussianization through empirical-CDF ranks.

Two transforms are provided:

* :func:`gaussianize_full` -- every column is mapped to
  ``Phi^-1(rank / (n + 1))`` where ``rank`` counts observations ``<=`` the
  value (ties share the maximal rank).
* :func:`gaussianize_truncated` -- the ECDF is estimated on a separate
  reference sample of size ``n1`` and clamped to ``[1/n1, (n1 - 1)/n1]``
  before applying ``Phi^-1``, so out-of-sample values stay finite.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._normal import RandomStream, open_uniform, std_normal_quantile
from ._validation import check_data_matrix
from .exceptions import DataError, DegenerateColumnError


@dataclass(frozen=True)
class GaussianizedSample:
    """Normal scores plus how they were produced.

    ``mode`` is ``"full"`` or ``"truncated"``; ``reference_rows`` holds the
    reference index set for truncated scores when it is known.
    """

    scores: np.ndarray
    mode: str
    source_n_ref: int
    reference_rows: np.ndarray | None = None

    @property
    def shape(self):
        return self.scores.shape


def _check_nondegenerate(sorted_cols, block):
    constant = sorted_cols[0] == sorted_cols[-1]
    if np.any(constant):
        raise DegenerateColumnError(int(np.flatnonzero(constant)[0]), block)


def tied_groups(sorted_cols):
    """Number of groups of tied values in each (already sorted) column."""
    if sorted_cols.shape[0] < 2:
        return np.zeros(sorted_cols.shape[1], dtype=int)
    eq = sorted_cols[1:] == sorted_cols[:-1]
    starts = eq.copy()
    starts[1:] &= ~eq[:-1]
    return starts.sum(axis=0)


def _warn_ties(sorted_cols, block):
    groups = tied_groups(sorted_cols)
    if np.any(groups):
        cols = np.flatnonzero(groups)
        detail = ", ".join(f"{c}:{groups[c]}" for c in cols[:10])
        more = "" if cols.size <= 10 else f" (+{cols.size - 10} more columns)"
        name = f"block {block} " if block else ""
        warnings.warn(f"{name}has tied values; tied groups per column {{{detail}}}{more}; "
                      "ties share the maximal rank", RuntimeWarning, stacklevel=3)


def _jittered(values, seed):
    span = values.max(axis=0) - values.min(axis=0)
    gen = RandomStream(seed, 0).generator()
    noise = open_uniform(gen, values.shape) - 0.5
    return values + 2e-9 * span * noise


def _score(counts, denom: float) -> np.ndarray:
    """``Phi^-1(counts / denom)``, upper half taken from the complement.

    Dividing first and inverting near 1 loses digits; the reflected form keeps
    the scores of ranks ``r`` and ``denom - r`` exact negatives.
    """
    counts = np.asarray(counts, dtype=float)
    upper = 2.0 * counts > denom
    tail = np.where(upper, denom - counts, counts) / denom
    q = std_normal_quantile(tail)
    return np.where(upper, -q, q)


def _counts_le(sorted_ref, target):
    # number of reference values <= target, column by column
    out = np.empty(target.shape, dtype=np.int64)
    for j in range(target.shape[1]):
        out[:, j] = np.searchsorted(sorted_ref[:, j], target[:, j], side="right")
    return out


def gaussianize_full(data, jitter=False, seed=0, block=None) -> GaussianizedSample:
    """Full-sample normal scores ``Phi^-1(rank_<= / (n + 1))``.

    Parameters
    ----------
    data : array_like of shape (n, k)
        Raw observations; ``n >= 3`` and all entries finite.
    jitter : bool
        Add seeded uniform noise of magnitude ``1e-9 * column range`` before
        ranking, which breaks ties deterministically.
    seed : int
        Seed for the jitter noise.
    block : str, optional
        Block label used in warnings and errors.

    Raises
    ------
    DegenerateColumnError
        If a column is constant.
    """
    x = check_data_matrix(data, name=block or "X")
    if jitter:
        x = _jittered(x, seed)
    sx = np.sort(x, axis=0)
    _check_nondegenerate(sx, block)
    _warn_ties(sx, block)
    n = x.shape[0]
    ranks = _counts_le(sx, x)
    scores = _score(ranks, n + 1.0)
    return GaussianizedSample(scores=scores, mode="full", source_n_ref=n)


def gaussianize_truncated(target, reference, block=None, reference_rows=None) -> GaussianizedSample:
    """Normal scores of ``target`` from the clamped ECDF of ``reference``.

    ``F(x) = #{reference <= x} / n1`` is clamped to ``[1/n1, (n1 - 1)/n1]``
    and mapped through ``Phi^-1``.
    """
    ref = check_data_matrix(reference, name=block or "reference")
    tgt = check_data_matrix(target, name=block or "target", min_samples=1)
    if tgt.shape[1] != ref.shape[1]:
        raise DataError(f"target has {tgt.shape[1]} columns, reference has {ref.shape[1]}")
    sref = np.sort(ref, axis=0)
    _check_nondegenerate(sref, block)
    n1 = ref.shape[0]
    counts = np.clip(_counts_le(sref, tgt), 1, n1 - 1)
    scores = _score(counts, float(n1))
    return GaussianizedSample(scores=scores, mode="truncated", source_n_ref=n1,
                              reference_rows=reference_rows)


class CoordinatewiseGaussianizer(TransformerMixin, BaseEstimator):
    """Rank-based normal-score transformer.

    ``fit`` stores the sorted reference columns.  With ``mode="truncated"``
    (default) :meth:`transform` applies the clamped reference ECDF.  With
    ``mode="full"``, :meth:`transform` maps each value to
    ``Phi^-1(count / (n_ref + 1))``, which on the training data reproduces
    :func:`gaussianize_full`; values below the reference minimum are mapped
    to the lowest rank.

    Parameters
    ----------
    mode : {"truncated", "full"}
    jitter : bool
        Tie-breaking noise, applied to the reference at fit time.
    random_state : int
    """

    def __init__(self, mode="truncated", jitter=False, random_state=0):
        self.mode = mode
        self.jitter = jitter
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.mode not in ("truncated", "full"):
            raise ValueError(f"mode must be 'truncated' or 'full', got {self.mode!r}")
        x = check_data_matrix(X)
        if self.jitter:
            x = _jittered(x, self.random_state)
        self.reference_sorted_ = np.sort(x, axis=0)
        _check_nondegenerate(self.reference_sorted_, None)
        _warn_ties(self.reference_sorted_, None)
        self.n_ref_ = x.shape[0]
        self.n_features_in_ = x.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "reference_sorted_")
        x = check_data_matrix(X, min_samples=1)
        if x.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} columns, got {x.shape[1]}")
        return self._scores(x)

    def fit_transform(self, X, y=None, **fit_params):
        # transform the jittered sample itself so ties are broken consistently
        self.fit(X)
        x = check_data_matrix(X)
        if self.jitter:
            x = _jittered(x, self.random_state)
        return self._scores(x)

    def _scores(self, x):
        counts = _counts_le(self.reference_sorted_, x)
        n1 = self.n_ref_
        if self.mode == "truncated":
            return _score(np.clip(counts, 1, n1 - 1), float(n1))
        return _score(np.maximum(counts, 1), n1 + 1.0)
