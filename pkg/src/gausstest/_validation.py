import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigurationError, DataError

MULTIPLIERS = ("gaussian", "mammen", "rademacher")


def check_data_matrix(values, name="X", min_samples=3, allow_empty_columns=False):
    """Validate a block of raw observations as an ``(n, k)`` float array.

    One-dimensional input is treated as a single column.  Entries must be
    finite and at least ``min_samples`` rows are required.
    """
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if allow_empty_columns and arr.ndim == 2 and arr.shape[1] == 0:
        if arr.shape[0] < min_samples:
            raise DataError(f"{name} has {arr.shape[0]} rows; at least {min_samples} required")
        return arr
    try:
        return check_array(arr, dtype=float, ensure_all_finite=True,
                           ensure_min_samples=min_samples, input_name=name)
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def check_same_rows(*blocks):
    sizes = {b.shape[0] for b in blocks}
    if len(sizes) != 1:
        raise DataError(f"blocks have mismatched sample sizes {sorted(sizes)}")
    return sizes.pop()


def check_multiplier(kind):
    if kind not in MULTIPLIERS:
        raise ConfigurationError(f"multiplier must be one of {MULTIPLIERS}, got {kind!r}")
    return kind


def check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)
