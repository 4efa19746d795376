"""Unit-stride cross-correlation and same-padded max pooling.

Both have a numba loop kernel and a numpy (sliding window) fallback; the
public functions pick one at call time, see :mod:`barrierfree._accel`.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .._accel import njit, numba_enabled
from ..errors import DimensionError
from .tensor import as_tensor


@njit
def _conv2d_loops(x, kernel, padding):
    c_in, h, w = x.shape
    c_out, _, kh, kw = kernel.shape
    oh = h + 2 * padding - kh + 1
    ow = w + 2 * padding - kw + 1
    out = np.zeros((c_out, oh, ow))
    # one kernel tap at a time; inner loop runs along contiguous output columns
    for o in range(c_out):
        for c in range(c_in):
            for u in range(kh):
                i_lo = max(0, padding - u)
                i_hi = min(oh, h + padding - u)
                for v in range(kw):
                    j_lo = max(0, padding - v)
                    j_hi = min(ow, w + padding - v)
                    tap = kernel[o, c, u, v]
                    for i in range(i_lo, i_hi):
                        r = i + u - padding
                        for j in range(j_lo, j_hi):
                            out[o, i, j] += tap * x[c, r, j + v - padding]
    return out


def _conv2d_numpy(x, kernel, padding):
    kh, kw = kernel.shape[2:]
    xp = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))  # (C, oh, ow, kh, kw)
    return np.einsum("chwuv,ocuv->ohw", windows, kernel, optimize=True)


@njit
def _max_pool_loops(x, k):
    c_n, h, w = x.shape
    r = k // 2
    out = np.empty_like(x)
    for c in range(c_n):
        for i in range(h):
            i0 = max(i - r, 0)
            i1 = min(i + r + 1, h)
            for j in range(w):
                j0 = max(j - r, 0)
                j1 = min(j + r + 1, w)
                m = x[c, i0, j0]
                for u in range(i0, i1):
                    for v in range(j0, j1):
                        if x[c, u, v] > m:
                            m = x[c, u, v]
                out[c, i, j] = m
    return out


def _max_pool_numpy(x, k):
    r = k // 2
    xp = np.pad(x, ((0, 0), (r, r), (r, r)), constant_values=-np.inf)
    return sliding_window_view(xp, (k, k), axis=(1, 2)).max(axis=(3, 4))


def conv2d_unit_stride(t, kernel, padding=None):
    """Stride-1 cross-correlation (no kernel flip) with zero padding.

    ``kernel`` has shape (C_out, C_in, kh, kw). ``padding=None`` means
    same-padding, which requires odd kernel sizes.
    """
    x = as_tensor(t)
    kernel = np.ascontiguousarray(kernel, dtype=np.float64)
    if kernel.ndim != 4:
        raise DimensionError(f"kernel must be (C_out, C_in, kh, kw), got {kernel.shape}")
    if kernel.shape[1] != x.shape[0]:
        raise DimensionError(
            f"kernel expects {kernel.shape[1]} input channels, tensor has {x.shape[0]}"
        )
    kh, kw = kernel.shape[2:]
    if padding is None:
        if kh != kw or kh % 2 == 0:
            raise DimensionError("same-padding needs a square odd kernel")
        padding = kh // 2
    if padding < 0:
        raise DimensionError("padding must be non-negative")
    if x.shape[1] + 2 * padding < kh or x.shape[2] + 2 * padding < kw:
        raise DimensionError("kernel larger than padded input")
    if numba_enabled():
        return _conv2d_loops(x, kernel, int(padding))
    return _conv2d_numpy(x, kernel, int(padding))


def max_pool2d_same(t, k):
    """Stride-1 max pool with a k x k window; padding never wins the max."""
    x = as_tensor(t)
    if k < 1 or k % 2 == 0:
        raise DimensionError(f"pool kernel must be odd and positive, got {k}")
    if numba_enabled():
        return _max_pool_loops(x, int(k))
    return _max_pool_numpy(x, int(k))


def silu(x):
    return x * sigmoid(x)


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
