"""Z-pooling, plane rotations and three-branch (triplet) attention."""
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError
from .conv import conv2d_unit_stride, sigmoid
from .tensor import as_tensor, check_axis


def zpool(t, axis=0):
    """Stack the max and the mean over ``axis`` (in that order) along ``axis``.

    The result has size 2 along ``axis``; all other dimensions are unchanged.
    """
    t = as_tensor(t)
    axis = check_axis(t, axis)
    return np.concatenate(
        [t.max(axis=axis, keepdims=True), t.mean(axis=axis, keepdims=True)], axis=axis
    )


def rotate_dims(t, dim_a, dim_b, direction="cw"):
    """Rotate the (dim_a, dim_b) plane by 90 degrees.

    ``direction`` is ``"cw"`` or ``"ccw"``; the two are exact inverses.
    The sizes of ``dim_a`` and ``dim_b`` swap.
    """
    t = np.asarray(t)
    a = check_axis(t, dim_a)
    b = check_axis(t, dim_b)
    if a == b:
        raise DimensionError("rotation needs two distinct dimensions")
    if direction == "cw":
        k = -1
    elif direction == "ccw":
        k = 1
    else:
        raise ValueError(f"direction must be 'cw' or 'ccw', got {direction!r}")
    return np.rot90(t, k=k, axes=(a, b))


# (plane to rotate, or None for the spatial branch)
_BRANCH_PLANES = ((0, 2), (0, 1), None)


@dataclass(frozen=True)
class TripletParams:
    """Branch kernels, each of shape (1, 2, k, k).

    Branch 0 rotates the (C, W) plane so its gate covers (H, C); branch 1
    rotates (C, H) so its gate covers (C, W); branch 2 gates (H, W) directly.
    """

    branch_kernels: tuple
    bypass_gates: bool = False

    def __post_init__(self):
        if len(self.branch_kernels) != 3:
            raise DimensionError("need exactly three branch kernels")
        kernels = tuple(np.asarray(k, dtype=np.float64) for k in self.branch_kernels)
        k = kernels[0].shape[-1]
        for kern in kernels:
            if kern.shape != (1, 2, k, k):
                raise DimensionError(f"branch kernel must be (1, 2, {k}, {k}), got {kern.shape}")
        if k % 2 == 0:
            raise DimensionError(f"branch kernel size must be odd, got {k}")
        object.__setattr__(self, "branch_kernels", kernels)

    @property
    def k(self):
        return self.branch_kernels[0].shape[-1]

    @classmethod
    def random(cls, k=7, rng=None, scale=0.5, bypass_gates=False):
        rng = np.random.default_rng(rng)
        return cls(tuple(rng.normal(0.0, scale, (1, 2, k, k)) for _ in range(3)), bypass_gates)


def branch_gate(t, kernel, plane):
    """Gate of one branch, mapped back to the orientation of ``t``.

    Rotate, z-pool over the leading axis, convolve, squash, rotate back.
    The gate broadcasts against ``t``.
    """
    view = t if plane is None else rotate_dims(t, *plane, "cw")
    pooled = zpool(np.ascontiguousarray(view), axis=0)
    gate = sigmoid(conv2d_unit_stride(pooled, kernel))
    if plane is None:
        return gate
    return rotate_dims(gate, *plane, "ccw")


def triplet_attention(t, params):
    """Average of the three gated views of ``t``; output shape equals input.

    Gating is elementwise with the same input in every branch, so the mean
    of the gated copies is computed as ``t * mean(gates)``. With
    ``bypass_gates`` every gate is exactly 1 and the input comes back
    unchanged.
    """
    t = as_tensor(t)
    if params.bypass_gates:
        gates = [np.ones((1, 1, 1))] * 3
    else:
        if t.shape[0] < 1 or min(t.shape) < 1:
            raise DimensionError("empty tensor")
        gates = [
            branch_gate(t, kern, plane)
            for kern, plane in zip(params.branch_kernels, _BRANCH_PLANES)
        ]
    mean_gate = (gates[0] + gates[1] + gates[2]) / 3.0
    return t * mean_gate
