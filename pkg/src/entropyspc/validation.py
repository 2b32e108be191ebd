"""Small input-validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateDesignError


def as_float_array(values, name: str, ndim: int = 1) -> np.ndarray:
    """Coerce to a float ndarray of the expected rank, rejecting NaN/inf."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_design(x) -> np.ndarray:
    """Validate a profile design vector: length >= 2 with at least two distinct points."""
    arr = as_float_array(x, "design")
    if arr.size < 2:
        raise ValueError("design needs at least two points")
    if np.unique(arr).size < 2:
        raise DegenerateDesignError("all design points are identical")
    return arr


def check_profile_matrix(X, n_points: int, name: str = "X") -> np.ndarray:
    """Validate a (k, n) response matrix against the design length."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of profile responses")
    if arr.shape[1] != n_points:
        raise ValueError(
            f"{name} has {arr.shape[1]} points per sample, design has {n_points}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha
