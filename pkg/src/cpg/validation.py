"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when runtime data (configs, distributions, batches) fails a contract."""


class ConfigurationError(ValidationError):
    """Raised when an environment, policy, or solver is built from bad parameters."""


def check_positive(name: str, value) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigurationError(f"{name} must be > 0, got {value}")
    return value


def check_nonnegative(name: str, value) -> float:
    value = float(value)
    if not value >= 0:
        raise ConfigurationError(f"{name} must be >= 0, got {value}")
    return value


def check_in_range(name: str, value, lo: float, hi: float) -> float:
    value = float(value)
    if not (lo <= value <= hi):
        raise ConfigurationError(f"{name} must be in [{lo}, {hi}], got {value}")
    return value


def as_float_vector(name: str, value, length: int | None = None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValidationError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def check_matrix(name: str, value, shape: tuple[int, int] | None = None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise ConfigurationError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def check_probability_vector(name: str, value, tol: float = 1e-12) -> np.ndarray:
    arr = as_float_vector(name, value)
    if np.any(arr < -tol):
        raise ValidationError(f"{name} has negative entries")
    if abs(arr.sum() - 1.0) > max(tol, 1e-12):
        raise ValidationError(f"{name} must sum to 1, got {arr.sum()!r}")
    return arr
