"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import InvalidArgumentError


def check_vector(v, n_features=None, name="v"):
    """Return ``v`` as a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    if n_features is not None and arr.shape[0] != n_features:
        raise InvalidArgumentError(
            f"{name} has {arr.shape[0]} features, expected {n_features}"
        )
    return arr


def check_matrix(X, n_features=None, dtype=(np.float32, np.float64), name="X"):
    """Validate a 2-D array of finite values.

    float32 input is kept as float32 (the dataset storage type); anything
    else is converted to float64.
    """
    try:
        X = check_array(X, dtype=dtype, ensure_all_finite=True, order="C")
    except ValueError as exc:
        raise InvalidArgumentError(f"{name}: {exc}") from exc
    if n_features is not None and X.shape[1] != n_features:
        raise InvalidArgumentError(
            f"{name} has {X.shape[1]} features, expected {n_features}"
        )
    return X


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive_float(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} must be a real number") from exc
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be finite and > 0, got {value}")
    return value


def check_seed(seed):
    """Resolve ``seed`` to a non-negative integer below 2**64.

    ``None`` draws fresh OS entropy; the result is returned so that it can be
    recorded and the run reproduced.
    """
    if seed is None:
        return int(np.random.SeedSequence().entropy % (1 << 64))
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, numbers.Integral):
        raise InvalidArgumentError(
            f"random_state must be an int seed or None, got {type(seed).__name__}"
        )
    seed = int(seed)
    if seed < 0 or seed >= (1 << 64):
        raise InvalidArgumentError("random_state must lie in [0, 2**64)")
    return seed
