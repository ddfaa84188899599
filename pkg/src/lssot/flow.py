"""
Gradient flow of a spherical point cloud toward a target under the LSSOT loss.

The loss is the squared Monte Carlo LSSOT distance. On each slice the LCOT
quantile matching assigns every reference grid point to one source atom;
holding those assignments fixed, the loss is a smooth function of the
projected angles, which are in turn smooth functions of the points away from
the slice poles.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .circle import grid
from .embedding import DEFAULT_M, distance, embed
from .errors import DimensionMismatch, NoCommonSlices
from .slicer import (
    DEFAULT_EPS,
    TWO_PI,
    frame_coordinates,
    make_cloud,
    project_all,
    sample_slices,
)

log = logging.getLogger(__name__)

MODES = ("riemannian", "spherical_coordinates")


@dataclass(frozen=True)
class FlowConfig:
    steps: int = 500
    lr: float = 50.0
    mode: str = "riemannian"
    slices_per_step: int = 200
    reseed_each_step: bool = False
    eps: float = DEFAULT_EPS
    M: int = DEFAULT_M
    max_halvings: int = 5

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.slices_per_step < 1 or self.M < 1:
            raise ValueError("slices_per_step and M must be positive")


@dataclass
class FlowTrajectory:
    snapshots: list
    losses: list
    lrs: list


def tangent_project(x, g):
    """Project ``g`` onto the tangent space of the sphere at ``x`` (row-wise)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    return g - x * np.sum(g * x, axis=-1, keepdims=True)


def exp_map(x, v):
    """Sphere exponential map exp_x(v) = x cos|v| + (v/|v|) sin|v| (row-wise)."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    small = nv < 1e-12
    safe = np.where(small, 1.0, nv)
    out = x * np.cos(nv) + v * (np.sin(nv) / safe)
    return np.where(small, x, out)


def _slice_matching(source, target_emb, slices, M, eps):
    """Per-slice matchings of the source against a target embedding.

    Yields, for every slice retained by both, the slice index, the original
    index of the source atom matched to each grid point, the integer winding
    of the quantile, the nearest integer to the raw residual, and the signed
    circular residual.
    """
    if source.d != slices.d:
        raise DimensionMismatch(f"source has d={source.d}, slices have d={slices.d}")
    if target_emb.slice_digest != slices.digest or target_emb.M != M:
        raise ValueError("target embedding was built with other slices or another M")
    angles, weights, capped = project_all(slices, source, eps)
    uv = frame_coordinates(slices.frames, source.points)
    x = grid(M)
    target_rows = dict(zip(target_emb.slice_ids.tolist(), target_emb.matrix))

    for l in range(slices.L):
        if l not in target_rows:
            continue
        keep = np.flatnonzero(~capped[l] & (weights[l] > 0))
        if keep.size == 0:
            continue
        w = weights[l, keep]
        order = np.argsort(angles[l, keep], kind="stable")
        atoms = keep[order]
        a = angles[l, atoms]
        w = w[order]
        cum = np.cumsum(w)
        cum[-1] = 1.0
        q = x - float(np.dot(w, a)) + 0.5
        wind = np.floor(q)
        pos = np.searchsorted(cum, q - wind, side="right")
        np.minimum(pos, a.size - 1, out=pos)
        r = a[pos] + wind - x - target_rows[l]
        turn = np.rint(r)
        yield l, atoms[pos], wind, turn, r - turn, uv[l], capped[l]


def lssot_loss_and_grad(source, target_emb, slices, M=DEFAULT_M, eps=DEFAULT_EPS):
    """Squared LSSOT loss and its Riemannian gradient with respect to the source points.

    Returns
    -------
    loss : float
    grad : ndarray, shape (n, d)
        Tangent to the sphere at every source point. Points inside the cap of
        a slice receive no contribution from that slice.
    """
    n = source.n
    dtheta = []
    ids = []
    uvs = []
    sq = []
    for l, atoms, _, _, res, uv, _ in _slice_matching(source, target_emb, slices, M, eps):
        sq.append(np.mean(res * res))
        dtheta.append(np.bincount(atoms, weights=2.0 * res / M, minlength=n))
        ids.append(l)
        uvs.append(uv)
    if not ids:
        raise NoCommonSlices("no slice is retained by both source and target")
    n_slices = len(ids)
    dtheta = np.stack(dtheta) / n_slices
    uv = np.stack(uvs)
    a, b = uv[..., 0], uv[..., 1]
    r2 = a * a + b * b
    coef = np.divide(dtheta, TWO_PI * r2, out=np.zeros_like(dtheta), where=r2 > 0)
    u1 = slices.frames[ids, :, 0]
    u2 = slices.frames[ids, :, 1]
    # d theta / dx = (a u2 - b u1) / (2 pi (a^2 + b^2)), a = u1.x, b = u2.x
    grad = (coef * a).T @ u2 - (coef * b).T @ u1
    loss = float(np.mean(sq))
    return loss, tangent_project(source.points, grad)


def lssot_grad(source, target, slices, M=DEFAULT_M, eps=DEFAULT_EPS):
    """Gradient over the sphere of LSSOT(source, target)^2 for a fixed slice set."""
    if source.d != target.d:
        raise DimensionMismatch("source and target differ in dimension")
    return lssot_loss_and_grad(source, embed(target, slices, M, eps), slices, M, eps)[1]


def slice_assignment(source, target_emb, slices, M=DEFAULT_M, eps=DEFAULT_EPS):
    """Discrete state of the per-slice matchings, for stability checks.

    Two configurations with equal assignment lie on the same smooth piece of
    the loss, where the analytic gradient is exact.
    """
    parts = []
    for l, atoms, wind, turn, _, _, capped in _slice_matching(source, target_emb, slices, M, eps):
        parts.append(np.concatenate(([l], atoms, wind, turn, capped)))
    return np.concatenate(parts)


def lssot_loss(source, target_emb, slices, M=DEFAULT_M, eps=DEFAULT_EPS):
    return distance(embed(source, slices, M, eps), target_emb) ** 2


def _spherical_step(points, grad, lr):
    x, y, z = points.T
    theta = np.arctan2(y, x)
    phi = np.arccos(np.clip(z, -1.0, 1.0))
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    d_theta = np.stack([-st * sp, ct * sp, np.zeros_like(z)], axis=1)
    d_phi = np.stack([ct * cp, st * cp, -sp], axis=1)
    theta = theta - lr * np.sum(grad * d_theta, axis=1)
    phi = phi - lr * np.sum(grad * d_phi, axis=1)
    out = np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _step_seed(seed, step):
    return int(np.random.SeedSequence([int(seed), 1, int(step)]).generate_state(1, np.uint64)[0])


def run_flow(source, target, cfg, seed=0, slices=None):
    """Move the source points along the LSSOT gradient toward the target.

    The loss is evaluated on a fixed slice set, ``slices`` if given and
    otherwise ``cfg.slices_per_step`` frames drawn from ``seed``. Gradients
    use the same slices unless ``cfg.reseed_each_step``, in which case every
    step draws fresh ones. Whenever a step increases the evaluation loss the
    learning rate is halved and the step retried, at most ``cfg.max_halvings``
    times per step; the last attempt is kept.

    Returns
    -------
    FlowTrajectory
        ``steps + 1`` snapshots and losses (the initial state included).
    """
    if source.d != target.d:
        raise DimensionMismatch("source and target differ in dimension")
    if cfg.mode == "spherical_coordinates" and source.d != 3:
        raise DimensionMismatch("spherical-coordinate descent is implemented on S^2 only")

    eval_slices = sample_slices(seed, cfg.slices_per_step, source.d) if slices is None else slices
    if eval_slices.d != source.d:
        raise DimensionMismatch("slices and clouds differ in dimension")
    eval_target = embed(target, eval_slices, cfg.M, cfg.eps)
    lr = cfg.lr
    current = source
    loss = lssot_loss(current, eval_target, eval_slices, cfg.M, cfg.eps)
    snapshots, losses, lrs = [current], [loss], [lr]

    for step in range(cfg.steps):
        if cfg.reseed_each_step:
            grad_slices = sample_slices(_step_seed(seed, step), cfg.slices_per_step, source.d)
            grad_target = embed(target, grad_slices, cfg.M, cfg.eps)
        else:
            grad_slices, grad_target = eval_slices, eval_target
        _, g = lssot_loss_and_grad(current, grad_target, grad_slices, cfg.M, cfg.eps)

        for attempt in range(cfg.max_halvings + 1):
            if cfg.mode == "riemannian":
                pts = exp_map(current.points, -lr * g)
            else:
                pts = _spherical_step(current.points, g, lr)
            candidate = make_cloud(pts, current.weights)
            new_loss = lssot_loss(candidate, eval_target, eval_slices, cfg.M, cfg.eps)
            if new_loss <= loss or attempt == cfg.max_halvings:
                break
            lr *= 0.5
            log.debug("step %d: loss rose, lr halved to %g", step, lr)

        current, loss = candidate, new_loss
        snapshots.append(current)
        losses.append(loss)
        lrs.append(lr)
    return FlowTrajectory(snapshots, losses, lrs)


def loss_spaced_frames(losses, frames):
    """Step indices at which the loss has dropped by equal fractions.

    Frame j is the first step whose loss is at most
    L0 - j/(frames-1) * (L0 - L_final); the first and last steps are always
    included. Falls back to evenly spaced steps when the loss does not move.
    """
    losses = np.asarray(losses, dtype=np.float64)
    last = losses.size - 1
    if frames == 1:
        return [last]
    drop = losses[0] - losses[-1]
    if not drop > 1e-15 * max(1.0, abs(losses[0])):
        return [int(round(j * last / (frames - 1))) for j in range(frames)]
    out = []
    for j in range(frames):
        level = losses[0] - j / (frames - 1) * drop
        hits = np.flatnonzero(losses <= level + 1e-15)
        out.append(int(hits[0]) if hits.size else last)
    out[0], out[-1] = 0, last
    return out
