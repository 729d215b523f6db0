"""Input validation helpers shared by the estimators.

These mirror the role of :func:`sklearn.utils.check_array` but are kept
minimal: the panels handled here are small, NaN marks a missing cell, and
the per-call overhead of the generic checker dominates on columns of a few
hundred values.
"""

import numbers

import numpy as np

from .errors import InputError, ValidationError


def check_panel(X, *, allow_nan=True, nonnegative=False, min_samples=1, name="X"):
    """Return ``X`` as a 2-D float64 array, validating its contents.

    Parameters
    ----------
    X : array-like of shape (n_samples, n_features)
        Input panel. ``None`` entries are read as missing.
    allow_nan : bool, default=True
        Whether NaN (missing) cells are accepted.
    nonnegative : bool, default=False
        Reject present values below zero.
    min_samples : int, default=1
        Minimum number of rows.
    name : str
        Name used in error messages.
    """
    arr = np.asarray(X, dtype=object if _has_none(X) else None)
    if arr.dtype == object:
        arr = np.array(
            [[np.nan if v is None else v for v in row] for row in np.atleast_2d(arr)],
            dtype=float,
        )
    else:
        try:
            arr = arr.astype(np.float64, copy=True)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{name} must be numeric: {exc}") from None
    if arr.ndim == 1:
        raise InputError(
            f"Expected 2D array for {name}, got 1D array instead; reshape with "
            "array.reshape(-1, 1) for a single indicator."
        )
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got {arr.ndim} dimensions")
    if arr.shape[0] < min_samples:
        raise InputError(f"{name} has {arr.shape[0]} rows; at least {min_samples} required")
    if np.isinf(arr).any():
        raise InputError(f"{name} contains infinite values")
    if not allow_nan and np.isnan(arr).any():
        raise InputError(f"{name} contains missing values")
    if nonnegative:
        bad = np.argwhere(arr < 0)
        if bad.size:
            i, j = bad[0]
            raise ValidationError("negative value; raw indicator values must be >= 0", row=int(i), column=int(j))
    return arr


def check_n_features(estimator, X):
    n = getattr(estimator, "n_features_in_", None)
    if n is not None and X.shape[1] != n:
        raise InputError(
            f"X has {X.shape[1]} features, but {type(estimator).__name__} "
            f"is expecting {n} features as input"
        )


def check_positive_int(value, name, *, low=1, high=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputError(f"{name} must be an integer, got {value!r}")
    if value < low or (high is not None and value > high):
        rng = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise InputError(f"{name} must be in {rng}, got {value}")
    return int(value)


def _has_none(X):
    if isinstance(X, np.ndarray):
        return X.dtype == object
    try:
        return any(v is None for row in X for v in (row if np.iterable(row) else [row]))
    except TypeError:
        return False
