"""Input validation helpers used by the public API surface."""

from __future__ import annotations

import numpy as np


def as_feature_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float64 array with at least one column.

    Accepts anything ``np.asarray`` understands.  A single feature vector
    must be passed as a 1xd matrix; 1-D input is rejected to keep the
    row-per-sample convention unambiguous.
    """
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D (samples x features), got ndim={A.ndim}")
    if A.shape[1] < 1:
        raise ValueError(f"{name} must have at least one column, got shape {A.shape}")
    if A.size and not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_label_vector(y, n: int | None = None, name: str = "labels") -> np.ndarray:
    """Coerce ``y`` to a 1-D int array of 0/1 labels, optionally of length ``n``."""
    v = np.asarray(y)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={v.ndim}")
    iv = v.astype(np.int64)
    if v.dtype.kind == "f" and not np.array_equal(iv, v):
        raise ValueError(f"{name} must be integral 0/1 values")
    if not np.all((iv == 0) | (iv == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    if n is not None and iv.shape[0] != n:
        raise ValueError(f"{name} has length {iv.shape[0]}, expected {n}")
    return iv


def as_image(img, name: str = "image") -> np.ndarray:
    """Coerce ``img`` to an HxWx3 uint8 array."""
    a = np.asarray(img)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"{name} must be HxWx3 RGB, got shape {a.shape}")
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError(f"{name} must hold 8-bit integer samples, got dtype {a.dtype}")
        if a.min() < 0 or a.max() > 255:
            raise ValueError(f"{name} samples must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def check_in_unit_interval(value: float, name: str, *, closed_right: bool = True) -> float:
    """Validate a scalar in [0, 1] (or [0, 1) when ``closed_right`` is false)."""
    v = float(value)
    if not np.isfinite(v) or v < 0.0 or (v > 1.0 if closed_right else v >= 1.0):
        top = "1" if closed_right else "1)"
        bracket = "[0, " + top + ("]" if closed_right else "")
        raise ValueError(f"{name} must lie in {bracket}, got {value!r}")
    return v
