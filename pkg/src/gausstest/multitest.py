"""Benjamini-Hochberg step-up procedure."""
import numpy as np

from .exceptions import ConfigurationError, DataError


def bh_adjust(pvalues, q: float = 0.05):
    """Benjamini-Hochberg rejections and adjusted p-values.

    Rejects the ``k`` smallest p-values, where ``k`` is the largest index with
    ``p_(k) <= k q / m``.  Adjusted values are the running minimum of
    ``m p_(k) / k`` taken from the largest p-value down, capped at 1.

    Returns
    -------
    reject : ndarray of bool
    adjusted : ndarray of float
        Both in the input order.
    """
    p = np.asarray(pvalues, dtype=float).ravel()
    if not 0.0 < q < 1.0:
        raise ConfigurationError(f"q must lie in (0, 1), got {q}")
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise DataError("p-values must lie in [0, 1]")
    m = p.size
    if m == 0:
        return np.zeros(0, dtype=bool), np.zeros(0)
    order = np.argsort(p, kind="stable")
    ranked = p[order]
    k = np.arange(1, m + 1)
    below = np.flatnonzero(ranked <= k * q / m)
    reject = np.zeros(m, dtype=bool)
    if below.size:
        reject[order[:below[-1] + 1]] = True
    adj_sorted = np.minimum.accumulate((m * ranked / k)[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(adj_sorted, 1.0)
    return reject, adjusted
