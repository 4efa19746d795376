"""Cross-entropy, focal and quality focal losses with analytic derivatives.

All functions accept scalars or numpy arrays (broadcast elementwise) and
clamp log arguments to ``[eps, 1]``.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError

EPS = 1e-12


@dataclass(frozen=True)
class LossParams:
    alpha: float = 0.25
    gamma: float = 2.0
    beta: float = 2.0
    epsilon: float = EPS

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma < 0 or self.beta < 0:
            raise DomainError("gamma and beta must be non-negative")
        if not 0.0 < self.epsilon <= 1e-6:
            raise DomainError(f"epsilon must lie in (0, 1e-6], got {self.epsilon}")


def _unit(x, name):
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x >= 0.0) | ~(x <= 1.0)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


def _binary(y):
    y = np.asarray(y)
    if np.any((y != 0) & (y != 1)):
        raise DomainError("label must be 0 or 1")
    return y == 1


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _clamped_log(x, eps):
    return np.log(np.clip(x, eps, 1.0))


def _p_t(p, y):
    p = _unit(p, "p")
    pos = _binary(y)
    return np.where(pos, p, 1.0 - p), pos


def cross_entropy(p, y, eps=EPS):
    p_t, _ = _p_t(p, y)
    return _out(-_clamped_log(p_t, eps))


def focal_loss(p, y, params=LossParams()):
    p_t, pos = _p_t(p, y)
    alpha_t = np.where(pos, params.alpha, 1.0 - params.alpha)
    return _out(-alpha_t * (1.0 - p_t) ** params.gamma * _clamped_log(p_t, params.epsilon))


def quality_focal_loss(sigma, y, beta=2.0, eps=EPS):
    sigma = _unit(sigma, "sigma")
    y = _unit(y, "y")
    bce = y * _clamped_log(sigma, eps) + (1.0 - y) * _clamped_log(1.0 - sigma, eps)
    return _out(-np.abs(y - sigma) ** beta * bce)


# Derivatives below hold on the open interval where no clamp is active.

def cross_entropy_grad(p, y):
    """d CE / d p."""
    p_t, pos = _p_t(p, y)
    return _out(np.where(pos, -1.0, 1.0) / p_t)


def focal_loss_grad(p, y, params=LossParams()):
    """d FL / d p."""
    p_t, pos = _p_t(p, y)
    a = np.where(pos, params.alpha, 1.0 - params.alpha)
    g = params.gamma
    q = 1.0 - p_t
    if g == 0:
        dq = np.zeros_like(q)
    else:
        dq = g * q ** (g - 1.0)
    d_pt = -a * (q ** g / p_t - dq * np.log(p_t))
    return _out(np.where(pos, 1.0, -1.0) * d_pt)


def quality_focal_loss_grad(sigma, y, beta=2.0):
    """d QFL / d sigma (away from sigma == y when beta <= 1)."""
    sigma = _unit(sigma, "sigma")
    y = _unit(y, "y")
    d = sigma - y
    bce = y * np.log(sigma) + (1.0 - y) * np.log(1.0 - sigma)
    dbce = y / sigma - (1.0 - y) / (1.0 - sigma)
    mod = np.abs(d) ** beta
    dmod = beta * np.abs(d) ** (beta - 1.0) * np.sign(d) if beta != 0 else np.zeros_like(d)
    return _out(-(dmod * bce + mod * dbce))
