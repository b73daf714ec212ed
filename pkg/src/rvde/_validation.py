"""Input validation shared by the estimators."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DimensionError, ParameterError


def check_points(X, *, name="X") -> np.ndarray:
    """Return ``X`` as a finite 2-D float array; a 1-D input is a column of scalars."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    try:
        return check_array(X, dtype=np.float64, ensure_2d=True, input_name=name)
    except ValueError as exc:
        raise ParameterError(str(exc)) from exc


def check_queries(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if n_features == 1 else X[None, :]
    X = check_points(X)
    if X.shape[1] != n_features:
        raise DimensionError(f"X has {X.shape[1]} features, but the estimator was fitted with {n_features}")
    return X


def check_positive(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_count(value, name: str, minimum: int = 1) -> int:
    if not isinstance(value, numbers.Integral) or value < minimum:
        raise ParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
