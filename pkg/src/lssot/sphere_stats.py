"""
Test data on S^2 (von Mises-Fisher samples, Fibonacci points) plus geodesic
distances and classical MDS for analysing distance matrices.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadKappa
from .slicer import make_cloud


@dataclass(frozen=True)
class VmfParams:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.shape != (3,):
            raise ValueError("mu must be a vector in R^3")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
            raise ValueError("mu must have unit norm")
        if not self.kappa > 0:
            raise BadKappa(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    coordinates: np.ndarray
    eigenvalues: np.ndarray
    negative_eigenvalues: np.ndarray


def rotation_to(mu):
    """Rotation matrix sending the north pole e_3 to ``mu``."""
    mu = np.asarray(mu, dtype=np.float64)
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(mu @ e3)
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(e3, mu)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def vmf_sample(params, n, seed):
    """Draw n points from the von Mises-Fisher distribution on S^2.

    The cosine of the angle to the mean direction is sampled by inverting its
    CDF, W = 1 + log(u + (1 - u) exp(-2 kappa)) / kappa, the longitude
    uniformly, and the result is rotated from the pole onto ``mu``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not params.kappa > 0:
        raise BadKappa(f"kappa must be positive, got {params.kappa}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    lon = rng.random(n) * 2.0 * np.pi
    k = float(params.kappa)
    w = 1.0 + np.log(u + (1.0 - u) * np.exp(-2.0 * k)) / k
    w = np.clip(w, -1.0, 1.0)
    s = np.sqrt(1.0 - w * w)
    pts = np.stack([s * np.cos(lon), s * np.sin(lon), w], axis=1)
    pts = pts @ rotation_to(params.mu).T
    return make_cloud(pts, normalize=True)


def mixture_sample(components, n, seed, weights=None):
    """Sample n points from a mixture of VMF components (counts split by weight)."""
    rng = np.random.default_rng(seed)
    weights = np.ones(len(components)) if weights is None else np.asarray(weights, float)
    counts = rng.multinomial(n, weights / weights.sum())
    parts = [
        vmf_sample(c, int(m), int(rng.integers(2**63))).points
        for c, m in zip(components, counts)
        if m > 0
    ]
    return make_cloud(np.concatenate(parts), normalize=True)


def fibonacci_sphere(n):
    """n near-uniform points on S^2 along the golden-angle spiral (poles included)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - 2.0 * i / (n - 1)
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    pts = np.stack([r * np.cos(golden * i), r * np.sin(golden * i), z], axis=1)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def geodesic_distance(x, y):
    """Great-circle distance arccos(<x, y>), row-wise, robust near 0 and pi."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    cross = np.linalg.norm(np.cross(x, y), axis=-1) if x.shape[-1] == 3 else None
    dot = np.sum(x * y, axis=-1)
    if cross is None:
        return np.arccos(np.clip(dot, -1.0, 1.0))
    return np.arctan2(cross, dot)


def geodesic_matrix(points):
    p = np.asarray(points, dtype=np.float64)
    return geodesic_distance(p[:, None, :], p[None, :, :])


def classical_mds(dist, p):
    """Classical (Torgerson) MDS of a distance matrix.

    Parameters
    ----------
    dist : array-like or DistanceMatrix, shape (K, K)
    p : int
        Target dimension; capped at K.

    Returns
    -------
    EmbeddingResult
        Coordinates from the top-p eigenpairs of -1/2 J D^2 J. Negative
        eigenvalues (non-Euclidean input) are clamped to zero in the
        coordinates and listed in ``negative_eigenvalues``.
    """
    D = np.asarray(getattr(dist, "values", dist), dtype=np.float64)
    K = D.shape[0]
    if p < 1:
        raise ValueError("p must be at least 1")
    p = min(p, K)
    J = np.eye(K) - np.full((K, K), 1.0 / K)
    B = -0.5 * J @ (D * D) @ J
    B = 0.5 * (B + B.T)
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[:p]
    coords = evecs[:, :p] * np.sqrt(np.clip(top, 0.0, None))
    negative = evals[evals < -1e-12 * max(1.0, abs(evals[0]))]
    return EmbeddingResult(coords, top, negative)
