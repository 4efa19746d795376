import numpy as np


def finite_diff_gradient(f, t, step=1e-6):
    """Central-difference gradient of scalar ``f`` at ``t`` (any array shape)."""
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.array(t, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = f(x)
        flat[i] = orig - step
        down = f(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def central_difference(f, x, step=1e-7):
    """Elementwise derivative of an elementwise (vectorised) function."""
    x = np.asarray(x, dtype=np.float64)
    return (f(x + step) - f(x - step)) / (2.0 * step)
