"""
Brute-force references for testing the fast paths.

These are deliberately slow and avoid the quantile and gradient code they
are used to check.
"""

import math
from dataclasses import dataclass

import numpy as np

from .circle import CircularDisplacement, cot_shift_cost


@dataclass(frozen=True)
class OracleConfig:
    alpha_grid: int = 10_000
    dense_M: int = 100_000
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.alpha_grid < 1 or self.dense_M < 1 or not self.fd_step > 0:
            raise ValueError("oracle settings must be positive")


def alpha_values(alpha_grid):
    """Rotations searched by :func:`cot_bruteforce`: ``alpha_grid`` points on [-1, 1)."""
    k = np.arange(alpha_grid, dtype=np.float64)
    return (2.0 * k - alpha_grid) / alpha_grid


def cot_bruteforce(m1, m2, cfg=OracleConfig()):
    """Minimize the quadratic COT shift cost over the rotation grid.

    ``m1`` may be None for the Lebesgue uniform measure. The shift cost is
    integrated exactly, so for a uniform ``m1`` the returned rotation is the
    grid point nearest the true minimizer.

    Returns
    -------
    alpha : float
    cost : float
    """
    alphas = alpha_values(cfg.alpha_grid)
    width = len(m2) + (0 if m1 is None else len(m1)) + 2
    step = max(1, 2_000_000 // width)
    costs = np.concatenate([
        cot_shift_cost(m1, m2, alphas[i:i + step]) for i in range(0, alphas.size, step)
    ])
    best = int(np.argmin(costs))
    return float(alphas[best]), float(costs[best])


def lcot_dense(m, cfg=OracleConfig()):
    """LCOT embedding on a dense grid, with the quantile found by direct comparison."""
    D = cfg.dense_M
    mean = math.fsum(w * t for w, t in zip(m.weights.tolist(), m.angles.tolist()))
    x = (np.arange(D, dtype=np.float64) + 0.5) / D
    s = x - mean + 0.5
    values = np.empty(D)
    cum = m.cum_weights
    for start in range(0, D, 8192):
        sl = slice(start, start + 8192)
        n = np.floor(s[sl])
        frac = s[sl] - n
        # first atom whose cumulative weight exceeds frac; the last one always does
        hit = cum[None, :] > frac[:, None]
        hit[:, -1] = True
        idx = hit.argmax(axis=1)
        values[sl] = m.angles[idx] + n - x[sl]
    return CircularDisplacement(values, D)


def finite_diff_grad(loss, cloud, cfg=OracleConfig()):
    """Central finite-difference gradient of ``loss`` over the sphere.

    Every coordinate of every point is perturbed by +-fd_step, the perturbed
    point is pulled back onto the sphere, and the resulting gradient rows are
    projected onto the tangent spaces.

    Parameters
    ----------
    loss : callable
        Maps a SphericalPointCloud to a float.
    cloud : SphericalPointCloud

    Returns
    -------
    ndarray, shape (n, d)
    """
    from .slicer import make_cloud

    h = cfg.fd_step
    x0 = np.array(cloud.points)
    grad = np.zeros_like(x0)
    for i in range(x0.shape[0]):
        for j in range(x0.shape[1]):
            vals = []
            for sign in (1.0, -1.0):
                x = x0.copy()
                x[i, j] += sign * h
                x[i] /= np.linalg.norm(x[i])
                vals.append(loss(make_cloud(x, cloud.weights)))
            grad[i, j] = (vals[0] - vals[1]) / (2.0 * h)
    radial = np.sum(grad * x0, axis=1)
    return grad - x0 * radial[:, None]
