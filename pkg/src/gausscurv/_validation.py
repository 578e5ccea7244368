"""Input validation helpers shared by the estimators and evaluators."""

import numbers

import numpy as np

from .exceptions import InvalidParameterError, NotFittedError


def check_points(X, name="X"):
    """Return ``X`` as a float array whose last axis has length 2.

    A single point ``(x1, x2)`` is accepted and promoted to shape ``(2,)``.
    """
    X = np.asarray(X, dtype=float)
    if X.shape == () or X.shape[-1] != 2:
        raise InvalidParameterError(
            f"{name} must have a trailing axis of length 2, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidParameterError(f"{name} contains non-finite coordinates")
    return X


def check_point(y, name="y", nonzero=False):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (2,) or not np.all(np.isfinite(y)):
        raise InvalidParameterError(f"{name} must be a finite 2-vector, got {y!r}")
    if nonzero and not np.any(y):
        raise InvalidParameterError(f"{name} must be nonzero")
    return y


def check_scalar(x, name, *, min_val=None, max_val=None,
                 include_min=True, include_max=True, integer=False):
    """Validate a real (or integer) scalar against optional bounds."""
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(x, bool) or not isinstance(x, kind):
        if integer and isinstance(x, numbers.Real) and float(x).is_integer():
            x = int(x)
        else:
            raise InvalidParameterError(f"{name} must be {'an integer' if integer else 'real'}, got {x!r}")
    if not np.isfinite(x):
        raise InvalidParameterError(f"{name} must be finite, got {x!r}")
    if min_val is not None:
        bad = x < min_val if include_min else x <= min_val
        if bad:
            op = ">=" if include_min else ">"
            raise InvalidParameterError(f"{name} must be {op} {min_val}, got {x!r}")
    if max_val is not None:
        bad = x > max_val if include_max else x >= max_val
        if bad:
            op = "<=" if include_max else "<"
            raise InvalidParameterError(f"{name} must be {op} {max_val}, got {x!r}")
    return x


def check_is_fitted(estimator, attributes):
    if isinstance(attributes, str):
        attributes = [attributes]
    if not all(hasattr(estimator, a) for a in attributes):
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first.")


def polar_points(radii, n_angles, center=(0.0, 0.0)):
    """Points ``center + r e^{i theta}`` on a (len(radii), n_angles, 2) array."""
    radii = np.asarray(radii, dtype=float)
    theta = 2.0 * np.pi * np.arange(n_angles) / n_angles
    pts = np.empty(radii.shape + (n_angles, 2))
    pts[..., 0] = center[0] + radii[..., None] * np.cos(theta)
    pts[..., 1] = center[1] + radii[..., None] * np.sin(theta)
    return pts
