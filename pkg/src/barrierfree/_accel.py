"""Numba dispatch.

Hot loops are written twice: a numba kernel and a numpy fallback. Setting
``BARRIERFREE_DISABLE_NUMBA=1`` (or running without numba installed) selects
the numpy path everywhere.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLE_ENV = "BARRIERFREE_DISABLE_NUMBA"


def numba_enabled():
    if numba is None:
        return False
    return os.environ.get(DISABLE_ENV, "0").strip().lower() not in ("1", "true", "yes")


def njit(func):
    """Compile ``func`` with numba when available; otherwise return it as-is."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
