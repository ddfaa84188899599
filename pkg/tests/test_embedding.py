import logging

import numpy as np
import pytest

from lssot.circle import circ_abs, from_points, lcot_distance, lcot_embed, uniform_grid
from lssot.embedding import (
    distance,
    embed,
    pairwise,
    pairwise_from_embeddings,
    pairwise_naive,
    ssw_reference,
)
from lssot.errors import DimensionMismatch, EmbeddingFailed, NoCommonSlices, SliceSetMismatch
from lssot.slicer import make_cloud, sample_slices, slices_from_frames

E12 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])


def circle_cloud(angles, weights=None):
    t = 2 * np.pi * np.asarray(angles)
    return make_cloud(np.stack([np.cos(t), np.sin(t)], axis=1), weights, normalize=True)


def random_cloud(rng, n, d=3):
    return make_cloud(rng.standard_normal((n, d)), normalize=True)


def test_equator_uniform_is_zero():
    M = 256
    t = 2 * np.pi * (np.arange(M) + 0.5) / M
    cloud = make_cloud(np.stack([np.cos(t), np.sin(t), np.zeros(M)], axis=1), normalize=True)
    e = embed(cloud, slices_from_frames(E12), M)
    expected = lcot_embed(uniform_grid(M), M).values
    assert np.max(circ_abs(e.matrix[0])) <= 1 / M
    assert np.max(circ_abs(e.matrix[0] - expected)) <= 1e-12


def test_shape_and_metadata(rng):
    s = sample_slices(3, 12, 3)
    e = embed(random_cloud(rng, 40), s, 64)
    assert e.matrix.shape == (12, 64)
    assert (e.L, e.M, e.d, e.slice_seed) == (12, 64, 3, 3)
    assert e.slice_ids.tolist() == list(range(12))
    assert e.dropped_slices.size == 0


def test_identity_frame_d2(rng):
    m = from_points(rng.random(15), rng.random(15) + 0.1)
    cloud = circle_cloud(m.angles, m.weights)
    e = embed(cloud, slices_from_frames(np.eye(2)), 128)
    np.testing.assert_allclose(e.matrix[0], lcot_embed(m, 128).values, atol=1e-12)


def test_d2_diracs():
    M = 1000
    s = sample_slices(0, 16, 2)
    d = distance(embed(circle_cloud([0.0]), s, M), embed(circle_cloud([0.25]), s, M))
    assert abs(d - 0.25) <= 2 / M


def test_d2_equals_lcot(rng):
    s = sample_slices(1, 64, 2)
    M = 256
    for _ in range(10):
        a = from_points(rng.random(8), rng.random(8) + 0.1)
        b = from_points(rng.random(11), rng.random(11) + 0.1)
        lssot = distance(embed(circle_cloud(a.angles, a.weights), s, M), embed(circle_cloud(b.angles, b.weights), s, M))
        assert abs(lssot - lcot_distance(lcot_embed(a, M), lcot_embed(b, M))) <= 1e-10


def test_threads_do_not_change_result(rng):
    s = sample_slices(5, 37, 3)
    c = random_cloud(rng, 50)
    a = embed(c, s, 128, threads=1).matrix
    b = embed(c, s, 128, threads=4).matrix
    assert a.tobytes() == b.tobytes()


def test_capped_slice_is_dropped(caplog):
    # one frame spans e1, e2; the other is orthogonal to e3 only through its second column
    pole = make_cloud([[0.0, 0.0, 1.0]])
    frames = np.stack([E12, np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]])])
    with caplog.at_level(logging.WARNING):
        e = embed(pole, slices_from_frames(frames), 32)
    assert e.dropped_slices.tolist() == [0]
    assert e.slice_ids.tolist() == [1]
    assert e.matrix.shape == (1, 32)
    assert caplog.records


def test_all_capped():
    with pytest.raises(EmbeddingFailed):
        embed(make_cloud([[0.0, 0.0, 1.0]]), slices_from_frames(E12), 32)


def test_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        embed(random_cloud(rng, 5, 4), sample_slices(0, 3, 3))


def test_distance_checks(rng):
    c = random_cloud(rng, 20)
    e1 = embed(c, sample_slices(0, 5, 3), 32)
    with pytest.raises(SliceSetMismatch):
        distance(e1, embed(c, sample_slices(1, 5, 3), 32))
    with pytest.raises(SliceSetMismatch):
        distance(e1, embed(c, sample_slices(0, 5, 3), 64))


def test_no_common_slices():
    frames = slices_from_frames(np.stack([E12, np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]])]))
    north = embed(make_cloud([[0.0, 0.0, 1.0]]), frames, 16)
    east = embed(make_cloud([[0.0, 1.0, 0.0]]), frames, 16)
    assert east.dropped_slices.tolist() == [1]
    with pytest.raises(NoCommonSlices):
        distance(north, east)


def test_dropped_slices_are_excluded(rng):
    frames = np.stack([E12, np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0]]), sample_slices(0, 1, 3).frames[0]])
    s = slices_from_frames(frames)
    north = embed(make_cloud([[0.0, 0.0, 1.0]]), s, 64)
    other = embed(random_cloud(rng, 10), s, 64)
    assert north.slice_ids.tolist() == [1, 2]
    r = circ_abs(north.matrix - other.matrix[1:])
    direct = np.sqrt(np.mean(r**2))
    assert distance(north, other) == pytest.approx(direct, abs=1e-14)


def test_symmetry_and_self(rng):
    s = sample_slices(2, 50, 3)
    a, b = embed(random_cloud(rng, 30), s, 128), embed(random_cloud(rng, 30), s, 128)
    assert distance(a, b) == distance(b, a)
    assert distance(a, a) == 0.0


def test_pairwise(rng):
    s = sample_slices(4, 30, 3)
    clouds = [random_cloud(rng, 25) for _ in range(5)]
    D = pairwise(clouds, s, 64, labels=list("abcde"))
    assert D.K == 5 and D.labels == list("abcde")
    assert np.array_equal(D.values, D.values.T)
    assert np.all(np.diag(D.values) == 0)
    for i in range(5):
        for j in range(5):
            assert abs(D.values[i, j] - distance(embed(clouds[i], s, 64), embed(clouds[j], s, 64))) <= 1e-12
    np.testing.assert_allclose(pairwise_naive(clouds, s, 64), D.values, atol=1e-12)
    assert pairwise(clouds, s, 64, threads=3).values.tobytes() == D.values.tobytes()


def test_pairwise_edge_cases(rng):
    s = sample_slices(0, 10, 3)
    c = random_cloud(rng, 10)
    assert pairwise([c], s, 32).values.tolist() == [[0.0]]
    assert np.all(pairwise([c, c, c], s, 32).values == 0)


def test_pairwise_labels_errors():
    bad = make_cloud([[0.0, 0.0, 1.0]])
    with pytest.raises(EmbeddingFailed, match="second"):
        pairwise([make_cloud([[1.0, 0.0, 0.0]]), bad], slices_from_frames(E12), 16, labels=["first", "second"])


def test_mixed_embeddings_rejected(rng):
    c = random_cloud(rng, 10)
    with pytest.raises(SliceSetMismatch):
        pairwise_from_embeddings([embed(c, sample_slices(0, 4, 3), 16), embed(c, sample_slices(1, 4, 3), 16)])


def test_ssw_reference(rng):
    s = sample_slices(0, 10, 3)
    c = random_cloud(rng, 12)
    assert ssw_reference(c, c, s, alpha_grid=200) <= 1e-9
    sd = sample_slices(0, 4, 2)
    assert abs(ssw_reference(circle_cloud([0.0]), circle_cloud([0.25]), sd, alpha_grid=1000) - 0.25) <= 2 / 1000
    with pytest.raises(ValueError):
        ssw_reference(c, c, s, alpha_grid=50)


def test_ssw_triangle(rng):
    s = sample_slices(6, 8, 3)
    for _ in range(50):
        a, b, c = (random_cloud(rng, 6) for _ in range(3))
        ab, bc, ac = (ssw_reference(x, y, s, alpha_grid=100) for x, y in ((a, b), (b, c), (a, c)))
        assert min(ab, bc, ac) >= 0
        assert ac <= ab + bc + 1e-9


def test_monte_carlo_concentration(rng):
    a, b = random_cloud(rng, 100), random_cloud(rng, 100)

    def spread(L):
        return np.std([distance(embed(a, sample_slices(s, L, 3), 128), embed(b, sample_slices(s, L, 3), 128))
                       for s in range(20)], ddof=1)

    # sd falls like 1/sqrt(L): quadrupling L halves it, up to sampling error of the sd itself
    ratio = spread(500) / spread(2000)
    assert 1.3 <= ratio <= 3.0
