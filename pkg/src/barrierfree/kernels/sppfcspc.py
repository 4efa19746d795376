"""Pooling pyramid wrapped in a two-path cross-stage-partial block.

Wiring (every conv stride 1, same padding, followed by SiLU)::

    main     = pre[-1](... pre[0](x))
    pyramid  = [main, p1, p2, p3]    p_i = maxpool_k(p_{i-1}), p_0 = main
    main     = post[-1](... post[0](concat(pyramid)))
    shortcut = shortcut(x)                          # 1x1
    out      = fusion(concat(main, shortcut))       # 1x1
"""
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .conv import conv2d_unit_stride, max_pool2d_same, silu
from .tensor import as_tensor


def _conv_act(x, kernel, activate):
    y = conv2d_unit_stride(x, kernel)
    return silu(y) if activate else y


@dataclass(frozen=True)
class SppfcspcParams:
    pre_pool: tuple
    post_pool: tuple
    shortcut: np.ndarray
    fusion: np.ndarray
    pool_kernel: int = 5
    activate: bool = True

    def __post_init__(self):
        if self.pool_kernel < 1 or self.pool_kernel % 2 == 0:
            raise DimensionError(f"pool_kernel must be odd and positive, got {self.pool_kernel}")
        if not self.pre_pool or not self.post_pool:
            raise DimensionError("pre_pool and post_pool need at least one conv each")
        as_arr = lambda k: np.asarray(k, dtype=np.float64)
        pre = tuple(as_arr(k) for k in self.pre_pool)
        post = tuple(as_arr(k) for k in self.post_pool)
        shortcut = as_arr(self.shortcut)
        fusion = as_arr(self.fusion)
        for kern in pre + post + (shortcut, fusion):
            if kern.ndim != 4 or kern.shape[2] != kern.shape[3] or kern.shape[2] % 2 == 0:
                raise DimensionError(f"expected square odd conv kernel, got {kern.shape}")
        for a, b in zip(pre, pre[1:]):
            if b.shape[1] != a.shape[0]:
                raise DimensionError("pre_pool stack channels do not chain")
        if post[0].shape[1] != 4 * pre[-1].shape[0]:
            raise DimensionError("first post_pool conv must take 4x the pre_pool width")
        for a, b in zip(post, post[1:]):
            if b.shape[1] != a.shape[0]:
                raise DimensionError("post_pool stack channels do not chain")
        if shortcut.shape[2] != 1 or fusion.shape[2] != 1:
            raise DimensionError("shortcut and fusion are pointwise convs")
        if shortcut.shape[1] != pre[0].shape[1]:
            raise DimensionError("shortcut must read the block input")
        if fusion.shape[1] != post[-1].shape[0] + shortcut.shape[0]:
            raise DimensionError("fusion input width must equal main + shortcut widths")
        object.__setattr__(self, "pre_pool", pre)
        object.__setattr__(self, "post_pool", post)
        object.__setattr__(self, "shortcut", shortcut)
        object.__setattr__(self, "fusion", fusion)

    @property
    def in_channels(self):
        return self.pre_pool[0].shape[1]

    @property
    def out_channels(self):
        return self.fusion.shape[0]

    @classmethod
    def random(cls, in_channels, out_channels, hidden_channels=None, pool_kernel=5, rng=None):
        """Default layout: pre = 1x1, 3x3, 1x1; post = 1x1, 3x3; hidden = C/2."""
        rng = np.random.default_rng(rng)
        c_ = hidden_channels or max(in_channels // 2, 1)

        def w(co, ci, k):
            return rng.normal(0.0, (ci * k * k) ** -0.5, (co, ci, k, k))

        return cls(
            pre_pool=(w(c_, in_channels, 1), w(c_, c_, 3), w(c_, c_, 1)),
            post_pool=(w(c_, 4 * c_, 1), w(c_, c_, 3)),
            shortcut=w(c_, in_channels, 1),
            fusion=w(out_channels, 2 * c_, 1),
            pool_kernel=pool_kernel,
        )


def pool_pyramid(t, pool_kernel=5):
    """``[t, p1, p2, p3]`` from three chained same-padded max pools."""
    levels = [as_tensor(t)]
    for _ in range(3):
        levels.append(max_pool2d_same(levels[-1], pool_kernel))
    return levels


def sppfcspc_forward(t, params):
    x = as_tensor(t)
    if x.shape[0] != params.in_channels:
        raise DimensionError(f"block expects {params.in_channels} channels, got {x.shape[0]}")
    main = x
    for kern in params.pre_pool:
        main = _conv_act(main, kern, params.activate)
    main = np.concatenate(pool_pyramid(main, params.pool_kernel), axis=0)
    for kern in params.post_pool:
        main = _conv_act(main, kern, params.activate)
    short = _conv_act(x, params.shortcut, params.activate)
    return _conv_act(np.concatenate([main, short], axis=0), params.fusion, params.activate)
