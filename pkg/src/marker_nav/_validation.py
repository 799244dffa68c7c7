"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np


def check_vector(value, size, name="value"):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_matrix(value, shape, name="value"):
    arr = np.asarray(value, dtype=float)
    if arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_rotation(rotation, tol=1e-9, name="rotation"):
    R = check_matrix(rotation, (3, 3), name)
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError(f"{name} is not a proper rotation matrix")
    return R


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value


def check_covariance(value, name, tol=1e-10):
    """Accept a 6-vector diagonal or a 6x6 matrix; return a symmetric PSD 6x6."""
    arr = np.asarray(value, dtype=float)
    if arr.shape == (6,):
        arr = np.diag(arr)
    arr = check_matrix(arr, (6, 6), name)
    if np.max(np.abs(arr - arr.T)) > tol:
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(arr)) < -tol:
        raise ValueError(f"{name} must be positive semi-definite")
    return arr


def check_is_fitted(estimator, attributes):
    from sklearn.exceptions import NotFittedError

    if not all(hasattr(estimator, attr) for attr in attributes):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet. "
            "Call 'fit' before using this estimator."
        )
