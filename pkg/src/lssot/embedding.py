"""
LSSOT embeddings of spherical point clouds and the distances between them.

Every embedding row is the LCOT displacement field (uniform reference, M-point
midpoint grid) of the cloud projected onto one slice. Distances are root-mean
over slices of squared LCOT distances, so K clouds cost K embeddings plus
K(K-1)/2 cheap row comparisons.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import oracle
from .circle import _lcot_values, from_points, grid
from .errors import (
    DimensionMismatch,
    EmbeddingFailed,
    LssotError,
    NoCommonSlices,
    SliceSetMismatch,
)
from .slicer import DEFAULT_EPS, project_all

log = logging.getLogger(__name__)

DEFAULT_M = 1024
DEFAULT_L = 500


@dataclass(frozen=True, eq=False)
class LssotEmbedding:
    """Stacked per-slice LCOT displacement fields of one spherical measure.

    Attributes
    ----------
    matrix : ndarray, shape (L - len(dropped_slices), M)
        Row i belongs to slice ``slice_ids[i]``.
    slice_ids : ndarray of int
        Indices of the retained slices, increasing.
    slice_seed : int or None
    slice_digest : str
        Hash of the frames; two embeddings are comparable only if it matches.
    L, M, d : int
    eps : float
    dropped_slices : ndarray of int
        Slices in which every point fell inside the epsilon-cap.
    """

    matrix: np.ndarray
    slice_ids: np.ndarray
    slice_seed: int | None
    slice_digest: str
    L: int
    M: int
    d: int
    eps: float
    dropped_slices: np.ndarray


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    labels: list

    @property
    def K(self):
        return self.values.shape[0]


def default_threads():
    return os.cpu_count() or 1


def _embed_rows(angles, weights, capped, x, rows):
    rows = np.asarray(rows, dtype=np.int64)
    out = {}
    clean = rows[~capped[rows].any(axis=1) & (weights[rows] > 0).all(axis=1)]
    if clean.size:
        order = np.argsort(angles[clean], axis=1)
        a = np.take_along_axis(angles[clean], order, axis=1)
        w = np.take_along_axis(weights[clean], order, axis=1)
        cum = np.cumsum(w, axis=1)
        cum[:, -1] = 1.0
        means = np.einsum("ij,ij->i", w, a)
        for i, l in enumerate(clean.tolist()):
            out[l] = _lcot_values(a[i], cum[i], means[i], x)
    for l in np.setdiff1d(rows, clean).tolist():
        keep = ~capped[l] & (weights[l] > 0)
        if not keep.any():
            continue
        a = angles[l, keep]
        w = weights[l, keep]
        order = np.argsort(a)
        a = a[order]
        w = w[order]
        cum = np.cumsum(w)
        cum[-1] = 1.0
        out[l] = _lcot_values(a, cum, float(np.dot(w, a)), x)
    return out


def _chunks(n, parts):
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def embed(cloud, slices, M=DEFAULT_M, eps=DEFAULT_EPS, threads=1):
    """LSSOT embedding of a spherical point cloud.

    Parameters
    ----------
    cloud : SphericalPointCloud
    slices : SliceSet
    M : int
        Size of the uniform reference grid on the circle.
    eps : float
        Radius of the polar cap; points with ||U^T x|| <= eps are dropped
        from that slice and their mass is spread over the survivors.
    threads : int
        Worker threads for the per-slice loop. The result does not depend on it.

    Returns
    -------
    LssotEmbedding

    Raises
    ------
    DimensionMismatch
        If the cloud and the slices live in different dimensions.
    EmbeddingFailed
        If every slice has all of its points capped.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    if cloud.d != slices.d:
        raise DimensionMismatch(f"cloud has d={cloud.d}, slices have d={slices.d}")
    angles, weights, capped = project_all(slices, cloud, eps)
    x = grid(M)

    if threads > 1 and slices.L > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = pool.map(
                lambda r: _embed_rows(angles, weights, capped, x, r),
                _chunks(slices.L, threads),
            )
            rows = {}
            for p in parts:
                rows.update(p)
    else:
        rows = _embed_rows(angles, weights, capped, x, range(slices.L))

    ids = np.array(sorted(rows), dtype=np.int64)
    dropped = np.setdiff1d(np.arange(slices.L), ids)
    if ids.size == 0:
        raise EmbeddingFailed("every slice has all points inside the epsilon-cap")
    if dropped.size:
        log.warning("dropped %d of %d slices: all points capped", dropped.size, slices.L)
    matrix = np.stack([rows[l] for l in ids])
    matrix.setflags(write=False)
    return LssotEmbedding(
        matrix=matrix,
        slice_ids=ids,
        slice_seed=slices.seed,
        slice_digest=slices.digest,
        L=slices.L,
        M=int(M),
        d=slices.d,
        eps=float(eps),
        dropped_slices=dropped,
    )


def _check_compatible(e1, e2):
    if e1.slice_digest != e2.slice_digest or (e1.L, e1.d) != (e2.L, e2.d):
        raise SliceSetMismatch("embeddings were built from different slice sets")
    if e1.M != e2.M:
        raise SliceSetMismatch(f"reference grid sizes differ: {e1.M} vs {e2.M}")


def _rows_sqdist(a, b):
    r = a - b
    r -= np.rint(r)
    r *= r
    return r.mean(axis=1).mean()


def distance(e1, e2):
    """LSSOT distance between two embeddings built on the same slice set.

    Slices dropped in either embedding are excluded from both and the Monte
    Carlo average is taken over the remaining ones.
    """
    _check_compatible(e1, e2)
    if e1.slice_ids.size == e2.slice_ids.size and np.array_equal(e1.slice_ids, e2.slice_ids):
        a, b = e1.matrix, e2.matrix
    else:
        _, i1, i2 = np.intersect1d(e1.slice_ids, e2.slice_ids, return_indices=True)
        if i1.size == 0:
            raise NoCommonSlices("the embeddings share no retained slice")
        a, b = e1.matrix[i1], e2.matrix[i2]
    return float(np.sqrt(_rows_sqdist(a, b)))


def pairwise_from_embeddings(embeddings, labels=None, threads=1):
    """Distance matrix from precomputed embeddings.

    Each unordered pair is evaluated once with :func:`distance`, so entries
    agree exactly with independent calls and the matrix is exactly symmetric.
    """
    K = len(embeddings)
    for e in embeddings[1:]:
        _check_compatible(embeddings[0], e)
    labels = list(labels) if labels is not None else [str(i) for i in range(K)]
    D = np.zeros((K, K))
    pairs = [(i, j) for i in range(K) for j in range(i + 1, K)]

    def fill(chunk):
        for p in chunk:
            i, j = pairs[p]
            D[i, j] = D[j, i] = distance(embeddings[i], embeddings[j])

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(fill, _chunks(len(pairs), threads)))
    else:
        fill(range(len(pairs)))
    return DistanceMatrix(D, labels)


def pairwise(clouds, slices, M=DEFAULT_M, eps=DEFAULT_EPS, labels=None, threads=1):
    """Pairwise LSSOT distances among K clouds: K embeddings, then row comparisons."""
    labels = list(labels) if labels is not None else [str(i) for i in range(len(clouds))]
    embeddings = []
    for cloud, label in zip(clouds, labels):
        try:
            embeddings.append(embed(cloud, slices, M, eps, threads))
        except LssotError as exc:
            raise type(exc)(f"{label}: {exc}") from exc
    return pairwise_from_embeddings(embeddings, labels, threads)


def pairwise_naive(clouds, slices, M=DEFAULT_M, eps=DEFAULT_EPS, pairs=None):
    """Baseline that re-embeds both clouds for every pair (for benchmarking).

    ``pairs`` restricts the work to a subset of (i, j) index pairs; the
    returned array holds NaN elsewhere.
    """
    K = len(clouds)
    D = np.full((K, K), np.nan)
    np.fill_diagonal(D, 0.0)
    if pairs is None:
        pairs = [(i, j) for i in range(K) for j in range(i + 1, K)]
    for i, j in pairs:
        D[i, j] = D[j, i] = distance(embed(clouds[i], slices, M, eps), embed(clouds[j], slices, M, eps))
    return D


def ssw_reference(c1, c2, slices, eps=DEFAULT_EPS, alpha_grid=1000):
    """Spherical sliced Wasserstein-2 distance by brute force (validation only).

    Each slice's circular OT cost is minimized over a grid of
    ``alpha_grid`` rotations with the exact shift cost; slices where either
    cloud is fully capped are skipped.
    """
    if alpha_grid < 100:
        raise ValueError("alpha_grid must be at least 100")
    if c1.d != slices.d or c2.d != slices.d:
        raise DimensionMismatch("clouds and slices differ in dimension")
    cfg = oracle.OracleConfig(alpha_grid=alpha_grid)
    a1, w1, k1 = project_all(slices, c1, eps)
    a2, w2, k2 = project_all(slices, c2, eps)
    costs = []
    for l in range(slices.L):
        s1, s2 = ~k1[l], ~k2[l]
        if not s1.any() or not s2.any():
            continue
        m1 = from_points(a1[l, s1], w1[l, s1])
        m2 = from_points(a2[l, s2], w2[l, s2])
        costs.append(oracle.cot_bruteforce(m1, m2, cfg)[1])
    if not costs:
        raise EmbeddingFailed("every slice has all points capped")
    return float(np.sqrt(np.mean(costs)))

