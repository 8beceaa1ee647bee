"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np

from .exceptions import DimensionMismatch, ZeroSnapshot


def as_complex_array(x, name="x"):
    arr = np.asarray(x)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric, got object array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr.astype(np.complex128, copy=False)


def check_snapshots(x, name="x", min_pulses=2):
    """Validate one snapshot ``(m,)`` or a stack of snapshots ``(..., m)``.

    Every snapshot must have at least ``min_pulses`` samples and must not be
    identically zero.
    """
    arr = as_complex_array(x, name)
    if arr.ndim < 1:
        raise ValueError(f"{name} must have at least one dimension")
    if arr.shape[-1] < min_pulses:
        raise ValueError(
            f"{name} needs at least {min_pulses} pulses, got {arr.shape[-1]}")
    if np.any(np.all(arr == 0, axis=-1)):
        raise ZeroSnapshot(f"{name} contains an all-zero snapshot")
    return arr


def check_square(A, name="A"):
    arr = as_complex_array(A, name)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DimensionMismatch(
            f"{name} must be a (stack of) square matrices, got shape {arr.shape}")
    return arr


def check_same_dim(A, B, names=("C1", "C2")):
    if A.shape[-1] != B.shape[-1]:
        raise DimensionMismatch(
            f"{names[0]} is {A.shape[-1]}x{A.shape[-1]} but "
            f"{names[1]} is {B.shape[-1]}x{B.shape[-1]}")


def check_probability(p, name="pf"):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")
    return p


def check_random_state(seed):
    """Turn ``None``, an int or a Generator into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
