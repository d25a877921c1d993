"""Input validation helpers shared by the estimator and CLI layers."""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeError


def check_features(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float array of shape (n_samples, n_features)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ShapeError(f"{name} contains non-finite values")
    return X


def check_targets(y, n_samples: int | None = None, name: str = "y"):
    """Coerce targets to 2-D; returns (array, was_1d)."""
    y = np.asarray(y, dtype=float)
    was_1d = y.ndim == 1
    if was_1d:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] == 0:
        raise ShapeError(f"{name} must be 1-D or 2-D and non-empty, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ShapeError(f"{name} contains non-finite values")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ShapeError(f"{name} has {y.shape[0]} rows, expected {n_samples}")
    return y, was_1d


def feature_bounds_from(X: np.ndarray, pad: float = 1e-9) -> np.ndarray:
    """Per-column (min, max) with degenerate columns widened."""
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    flat = hi - lo <= 0
    hi = np.where(flat, lo + 1.0, hi)
    span = hi - lo
    return np.stack([lo - pad * span, hi + pad * span], axis=1)
