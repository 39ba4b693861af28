"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .spectral import SpectralField, get_grid


def check_points(points) -> np.ndarray:
    """Evaluation points as a finite ``(m, 2)`` float array."""
    pts = check_array(points, dtype=np.float64, ensure_2d=True)
    if pts.shape[1] != 2:
        raise ValueError(f"points must have two columns, got shape {pts.shape}")
    return pts


def check_vector_field(a, name: str) -> SpectralField:
    """Accept a vector ``SpectralField`` or samples of shape ``(2, N, N)``."""
    if isinstance(a, SpectralField):
        if a.rank != "vector":
            raise ValueError(f"{name} must be a vector field")
        return a
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"{name} samples must have shape (2, N, N), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return SpectralField(get_grid(arr.shape[1]), "vector", values=arr)


def check_positive(value, name: str, strict: bool = True) -> float:
    v = float(value)
    if not np.isfinite(v) or (v <= 0 if strict else v < 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'nonnegative'}, got {value}")
    return v
