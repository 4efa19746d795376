"""Space-to-depth rearrangement and the SPD convolution block."""
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .conv import conv2d_unit_stride
from .tensor import as_tensor


def _check_scale(scale):
    if not isinstance(scale, (int, np.integer)) or scale < 1:
        raise DimensionError(f"scale must be a positive integer, got {scale!r}")
    return int(scale)


def spd_transform(t, scale):
    """Slice ``t`` into scale**2 strided submaps stacked along channels.

    Submap ``(x, y)`` is ``t[:, x::scale, y::scale]`` (x strides rows, y
    strides columns). Submaps are concatenated with x varying fastest:
    (0,0), (1,0), ..., (scale-1,0), (0,1), ... Output shape is
    (scale**2 * C, H // scale, W // scale). No padding is applied.
    """
    t = as_tensor(t)
    s = _check_scale(scale)
    c, h, w = t.shape
    if h % s or w % s:
        raise DimensionError(f"spatial size {h}x{w} not divisible by scale {s}")
    return np.concatenate([t[:, x::s, y::s] for y in range(s) for x in range(s)], axis=0)


def inverse_spd(t, scale):
    """Exact inverse of :func:`spd_transform`."""
    t = as_tensor(t)
    s = _check_scale(scale)
    cs, hs, ws = t.shape
    if cs % (s * s):
        raise DimensionError(f"{cs} channels not divisible by scale**2 = {s * s}")
    c = cs // (s * s)
    out = np.empty((c, hs * s, ws * s))
    for idx in range(s * s):
        y, x = divmod(idx, s)
        out[:, x::s, y::s] = t[idx * c:(idx + 1) * c]
    return out


@dataclass(frozen=True)
class SpdParams:
    """``kernel`` has shape (C2, scale**2 * C1, k, k) with odd k and C2 < scale**2 * C1."""

    scale: int
    kernel: np.ndarray

    def __post_init__(self):
        s = _check_scale(self.scale)
        kernel = np.asarray(self.kernel, dtype=np.float64)
        if kernel.ndim != 4:
            raise DimensionError(f"kernel must be rank 4, got shape {kernel.shape}")
        c2, c_in = kernel.shape[:2]
        if c_in % (s * s):
            raise DimensionError(f"kernel input channels {c_in} not a multiple of {s * s}")
        if not c2 < c_in:
            raise DimensionError(f"out channels {c2} must be below scale**2 * C1 = {c_in}")
        object.__setattr__(self, "kernel", kernel)

    @property
    def out_channels(self):
        return self.kernel.shape[0]

    @property
    def in_channels(self):
        return self.kernel.shape[1] // (self.scale * self.scale)

    @classmethod
    def random(cls, in_channels, out_channels, scale=2, k=3, rng=None):
        rng = np.random.default_rng(rng)
        fan_in = scale * scale * in_channels * k * k
        kernel = rng.normal(0.0, fan_in ** -0.5, (out_channels, scale * scale * in_channels, k, k))
        return cls(scale, kernel)


def spd_conv(t, params):
    """Space-to-depth followed by a same-padded stride-1 convolution."""
    return conv2d_unit_stride(spd_transform(t, params.scale), params.kernel)
