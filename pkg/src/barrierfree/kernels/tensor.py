"""Rank-3 (channels, height, width) arrays used by every kernel."""
import numpy as np

from ..errors import DimensionError, DomainError


def as_tensor(x, name="tensor"):
    """Return ``x`` as a C-contiguous float64 array of shape (C, H, W).

    Raises DimensionError for any other rank and DomainError for non-finite
    entries.
    """
    t = np.ascontiguousarray(x, dtype=np.float64)
    if t.ndim != 3:
        raise DimensionError(f"{name} must have shape (C, H, W), got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise DomainError(f"{name} contains non-finite values")
    return t


def check_axis(t, axis):
    if not isinstance(axis, (int, np.integer)) or not -t.ndim <= axis < t.ndim:
        raise DimensionError(f"axis {axis!r} invalid for tensor of rank {t.ndim}")
    return int(axis) % t.ndim
