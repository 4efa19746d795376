"""Oracle suite behind ``barrierfree kernels selfcheck``."""
import time
from dataclasses import dataclass

import numpy as np

from .attention import TripletParams, triplet_attention, zpool
from .conv import _conv2d_loops, _conv2d_numpy, _max_pool_loops, _max_pool_numpy, conv2d_unit_stride
from .gradcheck import central_difference
from .losses import (
    LossParams,
    cross_entropy,
    cross_entropy_grad,
    focal_loss,
    focal_loss_grad,
    quality_focal_loss,
    quality_focal_loss_grad,
)
from .spd import inverse_spd, spd_transform
from .sppfcspc import SppfcspcParams, sppfcspc_forward

P_GRID = np.linspace(0.01, 0.99, 99)
INTERIOR_GRID = np.linspace(0.05, 0.95, 19)
GRAD_RTOL = 1e-4
FD_STEP = 1e-7


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<28} max_error={self.max_error:.3e} "
                f"tol={self.tolerance:.1e} ({self.seconds:.2f}s)")


def check_loss_identities():
    """FL(gamma=0, alpha_t=1) == CE; QFL(y=sigma) == 0; QFL(y in {0,1}) == FL(alpha_t=1, gamma=beta)."""
    err = 0.0
    for y in (0, 1):
        fl = focal_loss(P_GRID, y, LossParams(alpha=float(y == 1), gamma=0.0))
        err = max(err, np.max(np.abs(fl - cross_entropy(P_GRID, y))))
    for beta in (0.5, 1.0, 2.0, 3.0):
        err = max(err, np.max(np.abs(quality_focal_loss(P_GRID, P_GRID, beta))))
        for y in (0, 1):
            qfl = quality_focal_loss(P_GRID, float(y), beta)
            fl = focal_loss(P_GRID, y, LossParams(alpha=float(y == 1), gamma=beta))
            err = max(err, np.max(np.abs(qfl - fl)))
    return err


def check_losses_nonnegative(cases, rng):
    p = rng.random(cases)
    y = rng.integers(0, 2, cases)
    soft = rng.random(cases)
    worst = min(
        np.min(cross_entropy(p, y)),
        np.min(focal_loss(p, y, LossParams(alpha=0.25, gamma=2.0))),
        np.min(quality_focal_loss(p, soft, 2.0)),
    )
    return max(0.0, -worst)


def check_gradients(draws, rng):
    """Worst relative error between analytic derivatives and central differences."""
    worst = 0.0
    x = INTERIOR_GRID

    def rel(a, f):
        return np.max(np.abs(a - f) / np.abs(a))

    for _ in range(draws):
        y_bin = int(rng.integers(0, 2))
        y_soft = float(rng.random())
        gamma = float(rng.uniform(0.0, 4.0))
        beta = float(rng.uniform(0.0, 4.0))
        params = LossParams(alpha=float(rng.random()), gamma=gamma)
        worst = max(
            worst,
            rel(cross_entropy_grad(x, y_bin), central_difference(lambda p: cross_entropy(p, y_bin), x, FD_STEP)),
            rel(focal_loss_grad(x, y_bin, params),
                central_difference(lambda p: focal_loss(p, y_bin, params), x, FD_STEP)),
            rel(quality_focal_loss_grad(x, y_soft, beta),
                central_difference(lambda s: quality_focal_loss(s, y_soft, beta), x, FD_STEP)),
        )
    return worst


def random_spd_case(rng):
    scale = int(rng.choice([1, 2, 4]))
    c = int(rng.integers(1, 9))
    side = scale * int(rng.integers(1, 32 // scale + 1))
    return rng.normal(size=(c, side, side)), scale


def check_spd_roundtrip(cases, rng):
    """Count of tensors that fail to round-trip bit-exactly (0 is a pass)."""
    bad = 0
    for _ in range(cases):
        x, scale = random_spd_case(rng)
        y = spd_transform(x, scale)
        if not (np.array_equal(inverse_spd(y, scale), x)
                and np.array_equal(np.sort(y, axis=None), np.sort(x, axis=None))):
            bad += 1
    worked = spd_transform(np.array([[[1.0, 2.0], [3.0, 4.0]]]), 2).ravel()
    if not np.array_equal(worked, [1.0, 3.0, 2.0, 4.0]):
        bad += 1
    return float(bad)


def random_attention_case(rng):
    shape = tuple(int(v) for v in rng.integers(1, 9, 3))
    k = int(rng.choice([3, 5, 7]))
    return rng.normal(0.0, 2.0, shape), TripletParams.random(k=k, rng=rng, scale=1.0)


def check_triplet(cases, rng):
    """Worst violation of shape, bypass identity and |out| <= |in|."""
    worst = 0.0
    for _ in range(cases):
        x, params = random_attention_case(rng)
        out = triplet_attention(x, params)
        if out.shape != x.shape:
            return float("inf")
        worst = max(worst, float(np.max(np.abs(out) - np.abs(x))))
        bypass = triplet_attention(x, TripletParams(params.branch_kernels, bypass_gates=True))
        if not np.array_equal(bypass, x):
            return float("inf")
    return max(worst, 0.0)


def check_zpool(cases, rng):
    worst = 0.0
    for _ in range(cases):
        x = rng.normal(size=tuple(int(v) for v in rng.integers(1, 6, 3)))
        axis = int(rng.integers(0, 3))
        z = zpool(x, axis)
        mx, mean = np.take(z, 0, axis=axis), np.take(z, 1, axis=axis)
        worst = max(worst, float(np.max(mean - mx)))
    return max(worst, 0.0)


def check_conv_paths(cases, rng):
    """Numba loops against the numpy path for conv and max pool."""
    worst = 0.0
    for _ in range(max(cases // 10, 1)):
        c_in, c_out = (int(v) for v in rng.integers(1, 5, 2))
        h, w = (int(v) for v in rng.integers(3, 12, 2))
        k = int(rng.choice([1, 3, 5]))
        x = rng.normal(size=(c_in, h, w))
        kern = rng.normal(size=(c_out, c_in, k, k))
        a = _conv2d_loops(x, kern, k // 2)
        b = _conv2d_numpy(x, kern, k // 2)
        worst = max(worst, float(np.max(np.abs(a - b))))
        worst = max(worst, float(np.max(np.abs(_max_pool_loops(x, k) - _max_pool_numpy(x, k)))))
    ident = np.zeros((3, 3, 1, 1))
    ident[[0, 1, 2], [0, 1, 2]] = 1.0
    x = rng.normal(size=(3, 5, 4))
    worst = max(worst, float(np.max(np.abs(conv2d_unit_stride(x, ident) - x))))
    return worst


def check_sppfcspc(rng):
    params = SppfcspcParams.random(8, 8, rng=rng)
    out = sppfcspc_forward(rng.normal(size=(8, 10, 10)), params)
    const = sppfcspc_forward(np.full((8, 10, 10), 0.7), params)
    ok = out.shape == (8, 10, 10) and np.all(np.isfinite(const))
    return 0.0 if ok else float("inf")


def run_selfcheck(cases=1000, seed=0):
    """Run every property; return a list of CheckResult."""
    rng = np.random.default_rng(seed)
    plan = [
        ("loss_identities", lambda: check_loss_identities(), 1e-12),
        ("losses_nonnegative", lambda: check_losses_nonnegative(cases, rng), 0.0),
        ("loss_gradients", lambda: check_gradients(cases, rng), GRAD_RTOL),
        ("spd_roundtrip", lambda: check_spd_roundtrip(cases, rng), 0.0),
        ("zpool_max_dominates_mean", lambda: check_zpool(cases, rng), 0.0),
        ("triplet_attention", lambda: check_triplet(cases, rng), 0.0),
        ("conv_pool_paths", lambda: check_conv_paths(cases, rng), 1e-10),
        ("sppfcspc_shape", lambda: check_sppfcspc(rng), 0.0),
    ]
    results = []
    for name, fn, tol in plan:
        t0 = time.perf_counter()
        try:
            err = float(fn())
        except Exception:  # a crash is a failed property, not a crashed report
            err = float("inf")
        results.append(CheckResult(name, err <= tol, err, tol, time.perf_counter() - t0))
    return results
