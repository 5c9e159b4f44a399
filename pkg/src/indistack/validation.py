"""Small input-validation helpers used at public API boundaries."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, ShapeError


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D float64 array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ShapeError(f"{name} must have length {dim}, got {arr.shape[0]}")
    return arr


def as_matrix(X, cols: int | None = None, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, optionally checking the column count."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise ShapeError(f"{name} must have {cols} columns, got {arr.shape[1]}")
    return arr


def as_batch(x, dim: int, name: str = "x") -> tuple[np.ndarray, bool]:
    """Promote a state vector or matrix of states to (B, dim).

    Returns the batch and a flag telling whether the input was a single
    vector (so callers can squeeze results back).
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ShapeError(f"{name} must have length {dim}, got {arr.shape[0]}")
        return arr[None, :], True
    if arr.ndim == 2:
        if arr.shape[1] != dim:
            raise ShapeError(f"{name} must have {dim} columns, got {arr.shape[1]}")
        return arr, False
    raise ShapeError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")


def as_box(box, dim: int, name: str = "box") -> tuple[np.ndarray, np.ndarray]:
    """Validate an axis-aligned box given as (lo, hi) arrays of length dim."""
    try:
        lo, hi = box
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name} must be a (lo, hi) pair") from exc
    lo = as_vector(lo, dim, f"{name}.lo")
    hi = as_vector(hi, dim, f"{name}.hi")
    if not np.all(hi > lo):
        raise ConfigurationError(f"{name} must satisfy hi > lo componentwise")
    return lo, hi


def require(condition: bool, error, message: str) -> None:
    if not condition:
        raise error(message)
