"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .exceptions import NonFinite


def check_vector(v, size=None, name="vector"):
    """Return `v` as a finite 1-D float array, optionally of length `size`."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return arr


def check_matrix(a, shape=None, name="matrix"):
    """Return `a` as a finite 2-D float array.

    Entries of `shape` may be ``None`` to leave that dimension unchecked.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1 and shape is not None and shape[0] == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None:
        for axis, expected in enumerate(shape):
            if expected is not None and arr.shape[axis] != expected:
                raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    return arr


def check_symmetric(a, rtol=1e-12, name="matrix"):
    """Check that a square matrix is symmetric to relative tolerance `rtol`."""
    arr = check_matrix(a, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if np.max(np.abs(arr - arr.T), initial=0.0) > rtol * scale:
        raise ValueError(f"{name} is not symmetric")
    return arr
