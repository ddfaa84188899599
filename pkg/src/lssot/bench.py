"""
Timing harness for pairwise distance computation.

For every (N, K) cell it times a single embedding, the embed-once pairwise
engine, the naive engine that re-embeds both clouds for every pair, and the
brute-force SSW reference. The last two are timed on a sample of pairs and
scaled to all K(K-1)/2 pairs, since their per-pair cost does not depend on
the pair.
"""

import time

import numpy as np

from .embedding import DEFAULT_M, embed, pairwise, pairwise_naive, ssw_reference
from .slicer import DEFAULT_EPS, make_cloud, sample_slices


def random_clouds(K, N, d, seed):
    rng = np.random.default_rng(seed)
    return [make_cloud(rng.standard_normal((N, d)), normalize=True) for _ in range(K)]


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def time_cell(N, K, L, M=DEFAULT_M, d=3, repeats=3, seed=0, pair_sample=5,
              ssw_pairs=1, alpha_grid=200, eps=DEFAULT_EPS, threads=1):
    """Wall times for one (N, K) cell.

    Returns
    -------
    list of dict
        One record per method with keys ``method``, ``raw`` (seconds per
        repeat, already scaled to all pairs), ``pairs_timed`` and ``median``.
    """
    slices = sample_slices(seed, L, d)
    clouds = random_clouds(K, N, d, seed + 1)
    n_pairs = K * (K - 1) // 2
    all_pairs = [(i, j) for i in range(K) for j in range(i + 1, K)]
    out = []

    def record(method, raw, timed):
        out.append({"method": method, "raw": raw, "pairs_timed": timed, "median": float(np.median(raw))})

    record("embed", [_timed(lambda: embed(clouds[0], slices, M, eps, threads)) for _ in range(repeats)], 0)
    record("pairwise", [_timed(lambda: pairwise(clouds, slices, M, eps, threads=threads)) for _ in range(repeats)], n_pairs)
    if n_pairs:
        sample = all_pairs[:max(1, min(pair_sample, n_pairs))]
        scale = n_pairs / len(sample)
        record("naive", [
            scale * _timed(lambda: pairwise_naive(clouds, slices, M, eps, pairs=sample))
            for _ in range(repeats)
        ], len(sample))
        if ssw_pairs > 0:
            sample = all_pairs[:min(ssw_pairs, n_pairs)]
            scale = n_pairs / len(sample)

            def run_ssw():
                for i, j in sample:
                    ssw_reference(clouds[i], clouds[j], slices, eps, alpha_grid)

            record("ssw", [scale * _timed(run_ssw) for _ in range(repeats)], len(sample))
    return out


def run(n_list, k_list, L, M=DEFAULT_M, d=3, repeats=3, seed=0, pair_sample=5,
        ssw_pairs=1, alpha_grid=200, eps=DEFAULT_EPS, threads=1):
    rows = []
    for N in n_list:
        for K in k_list:
            for rec in time_cell(N, K, L, M, d, repeats, seed, pair_sample, ssw_pairs, alpha_grid, eps, threads):
                rows.append({"N": N, "K": K, **rec})
    return rows
