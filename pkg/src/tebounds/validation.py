"""Small input-validation helpers shared by the estimator and ingestion."""

from __future__ import annotations

import numpy as np

from .errors import InputError


def as_outcome_array(values, name: str = "outcome") -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise InputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def as_binary_treatment(values, name: str = "treatment") -> np.ndarray:
    arr = np.asarray(values).ravel()
    try:
        num = arr.astype(float)
    except (TypeError, ValueError):
        raise InputError(f"non-binary treatment: {name} is not numeric")
    if not np.all(np.isfinite(num)) or not np.all(np.isin(num, (0.0, 1.0))):
        bad = sorted({v for v in np.unique(arr)} - {0, 1, 0.0, 1.0, "0", "1"})
        raise InputError(f"non-binary treatment: found values {bad[:5]!r}")
    return num.astype(int)


def as_covariate_keys(values, n_rows: int) -> list[tuple[str, ...]]:
    """Normalize covariates to one tuple of string labels per row."""
    if values is None:
        return [("all",)] * n_rows
    arr = np.asarray(values)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] != n_rows:
        raise InputError("covariates must have one row per observation")
    return [tuple(str(v) for v in row) for row in arr]


def check_unit_interval(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise InputError(f"{name} must lie strictly inside (0, 1), got {value}")
    return value
