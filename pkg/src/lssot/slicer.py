"""
Random great-circle slices of the sphere and projection onto them.

A slice is a d x 2 matrix U with orthonormal columns. A point x on the sphere
is projected to the unit vector U^T x / ||U^T x|| and then read as an angle
in turns. Points with ||U^T x|| <= eps sit in the polar cap of the slice and
are dropped, their mass spread equally over the remaining points.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .circle import CircularMeasure, from_points, reduce_turns
from .errors import AllPointsCapped, BadDimension, DimensionMismatch, EmptyMeasure, NegativeWeight

DEFAULT_EPS = 1e-6
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class SphericalPointCloud:
    """Weighted point cloud on S^{d-1}; build it with :func:`make_cloud`."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def make_cloud(points, weights=None, normalize=False):
    """Validate and freeze a spherical point cloud.

    Parameters
    ----------
    points : array-like, shape (n, d)
    weights : array-like, shape (n,), optional
        Nonnegative, normalized to sum 1. Uniform if omitted.
    normalize : bool
        Rescale every point to unit norm instead of requiring it.
    """
    x = np.array(points, dtype=np.float64, ndmin=2)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyMeasure("point cloud must be a non-empty (n, d) array")
    if x.shape[1] < 2:
        raise BadDimension("ambient dimension must be at least 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    norms = np.linalg.norm(x, axis=1)
    if normalize:
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero vector")
        x = x / norms[:, None]
    elif np.any(np.abs(norms - 1.0) > 1e-9):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"point {bad} has norm {norms[bad]!r}, expected 1")

    if weights is None:
        w = np.full(x.shape[0], 1.0 / x.shape[0])
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape[0] != x.shape[0]:
            raise ValueError("weights and points differ in length")
        if np.any(w < 0):
            raise NegativeWeight("weights must be nonnegative")
        total = w.sum()
        if not total > 0:
            raise EmptyMeasure("total weight is zero")
        w = w / total
    x.setflags(write=False)
    w.setflags(write=False)
    return SphericalPointCloud(x, w)


@dataclass(frozen=True, eq=False)
class SliceSet:
    """An ordered set of L orthonormal 2-frames in R^d.

    ``seed`` is None for frames supplied by the caller. ``digest`` is a hash
    of the frame bytes and identifies the slice set for distance checks.
    """

    frames: np.ndarray
    seed: int | None = None
    digest: str = field(default="")

    @property
    def L(self):
        return self.frames.shape[0]

    @property
    def d(self):
        return self.frames.shape[1]

    def __len__(self):
        return self.L


def slices_from_frames(frames, seed=None):
    """Wrap explicit frames (shape (L, d, 2)) into a :class:`SliceSet`."""
    f = np.array(frames, dtype=np.float64)
    if f.ndim == 2:
        f = f[None]
    if f.ndim != 3 or f.shape[2] != 2:
        raise BadDimension("frames must have shape (L, d, 2)")
    if f.shape[0] < 1 or f.shape[1] < 2:
        raise BadDimension("need L >= 1 and d >= 2")
    gram = np.einsum("lki,lkj->lij", f, f)
    if np.max(np.abs(gram - np.eye(2))) > 1e-10:
        raise ValueError("frames must have orthonormal columns")
    f.setflags(write=False)
    digest = hashlib.sha256(f.tobytes()).hexdigest()
    return SliceSet(f, seed, digest)


def _frame_stream(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_slices(seed, L, d):
    """Draw L frames uniformly from the Stiefel manifold V_2(R^d).

    Frame l is the Q factor of a d x 2 standard Gaussian matrix drawn from the
    RNG stream keyed by (seed, l), with signs fixed so that the diagonal of R
    is positive; without that fix the Q factor is not Haar distributed.
    """
    if d < 2:
        raise BadDimension(f"dimension must be at least 2, got {d}")
    if L < 1:
        raise BadDimension(f"need at least one slice, got {L}")
    seed = int(seed)
    z = np.stack([_frame_stream(seed, l).standard_normal((d, 2)) for l in range(L)])
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    frames = q * signs[:, None, :]
    return slices_from_frames(frames, seed)


def random_rotation(rng, d):
    """Haar-distributed rotation matrix in SO(d)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rotate_slices(slices, R):
    """Slice set {R^T U_l}; pairs with rotating clouds by R."""
    return slices_from_frames(np.einsum("ji,ljk->lik", R, slices.frames))


@dataclass(frozen=True, eq=False)
class ProjectedSlice:
    angles: np.ndarray
    weights: np.ndarray
    capped_indices: np.ndarray

    def measure(self) -> CircularMeasure:
        return from_points(self.angles, self.weights)


def chart_offset(frames):
    """Angle (turns) of the chart origin of each slice.

    For d >= 3 the origin is the first frame column. For d = 2 the slice
    circle is the sphere itself, so the angle is read in the ambient chart
    (measured from the image of e_1); the projection then only keeps the
    orientation of the frame, and every slice sees the measure unrotated.
    """
    frames = np.asarray(frames)
    if frames.shape[-2] != 2:
        return np.zeros(frames.shape[:-2])
    e1 = frames[..., 0, :]
    return np.arctan2(e1[..., 1], e1[..., 0]) / TWO_PI


def frame_coordinates(frames, points):
    """Planar coordinates U^T x for every slice and point: shape (L, n, 2)."""
    L, d, _ = frames.shape
    flat = np.ascontiguousarray(frames.transpose(1, 0, 2)).reshape(d, 2 * L)
    return (points @ flat).reshape(points.shape[0], L, 2).transpose(1, 0, 2)


def coordinates_to_angles(uv, offset=0.0):
    """Angle in turns of planar vectors, shifted by the chart offset."""
    theta = np.arctan2(uv[..., 1], uv[..., 0]) / TWO_PI
    return reduce_turns(theta - np.asarray(offset)[..., None])


def project_all(slices, cloud, eps=DEFAULT_EPS):
    """Project a cloud onto every slice at once.

    Returns
    -------
    angles : ndarray, shape (L, n)
        Angles in turns; entries for capped points are meaningless.
    weights : ndarray, shape (L, n)
        Capped points get weight 0 and the survivors share their mass equally.
    capped : ndarray of bool, shape (L, n)
    """
    if cloud.d != slices.d:
        raise DimensionMismatch(f"cloud has d={cloud.d}, slices have d={slices.d}")
    uv = frame_coordinates(slices.frames, cloud.points)
    radius = np.hypot(uv[..., 0], uv[..., 1])
    capped = radius <= eps
    angles = coordinates_to_angles(uv, chart_offset(slices.frames))
    weights = np.broadcast_to(cloud.weights, capped.shape).copy()
    if capped.any():
        n_capped = capped.sum(axis=1)
        survivors = cloud.n - n_capped
        lost = np.where(capped, weights, 0.0).sum(axis=1)
        share = np.divide(lost, survivors, out=np.zeros_like(lost), where=survivors > 0)
        weights = np.where(capped, 0.0, weights + share[:, None])
    return angles, weights, capped


def project(U, cloud, eps=DEFAULT_EPS):
    """Project a cloud onto a single frame ``U`` (shape (d, 2)).

    Raises
    ------
    AllPointsCapped
        If every point lies within ``eps`` of the slice's null space.
    """
    s = slices_from_frames(U)
    angles, weights, capped = project_all(s, cloud, eps)
    keep = ~capped[0]
    if not keep.any():
        raise AllPointsCapped("every point lies inside the epsilon-cap")
    return ProjectedSlice(
        angles=angles[0, keep],
        weights=weights[0, keep],
        capped_indices=np.flatnonzero(capped[0]),
    )
