import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lssot.errors import AllPointsCapped, BadDimension, DimensionMismatch, NegativeWeight
from lssot.slicer import (
    make_cloud,
    project,
    project_all,
    random_rotation,
    rotate_slices,
    sample_slices,
    slices_from_frames,
)

E12 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])


def test_sampling_is_deterministic():
    a = sample_slices(7, 3, 3).frames
    b = sample_slices(7, 3, 3).frames
    assert a.tobytes() == b.tobytes()
    assert sample_slices(8, 3, 3).frames.tobytes() != a.tobytes()


def test_prefix_stable():
    # frame l depends only on (seed, l)
    np.testing.assert_array_equal(sample_slices(3, 10, 4).frames[:4], sample_slices(3, 4, 4).frames)


@pytest.mark.parametrize("d", [2, 3, 5, 10])
def test_orthonormal(d):
    f = sample_slices(1, 200, d).frames
    gram = np.einsum("lki,lkj->lij", f, f)
    assert np.max(np.abs(gram - np.eye(2))) <= 1e-10


def test_d2_frames_orthogonal():
    for U in sample_slices(2, 50, 2).frames:
        np.testing.assert_allclose(U @ U.T, np.eye(2), atol=1e-12)
        assert abs(abs(np.linalg.det(U)) - 1) <= 1e-12


def test_bad_dimension():
    with pytest.raises(BadDimension):
        sample_slices(0, 3, 1)
    with pytest.raises(BadDimension):
        sample_slices(0, 0, 3)


def test_stiefel_uniformity():
    f = sample_slices(2024, 100_000, 3).frames
    n = np.cross(f[:, :, 0], f[:, :, 1])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    octant = (n > 0) @ np.array([1, 2, 4])
    share = np.bincount(octant, minlength=8) / n.shape[0]
    assert np.all(np.abs(share - 0.125) <= 0.005)


def test_sign_fix_matters():
    # without the sign fix the first column would lean toward the positive orthant of R's diagonal;
    # with it the first column is uniform, so its mean is near zero
    f = sample_slices(5, 20_000, 3).frames
    assert np.max(np.abs(f[:, :, 0].mean(axis=0))) < 0.02


def test_make_cloud_checks():
    with pytest.raises(ValueError):
        make_cloud([[0.5, 0.0, 0.0]])
    with pytest.raises(NegativeWeight):
        make_cloud([[1.0, 0.0]], [-1.0])
    c = make_cloud([[2.0, 0.0], [0.0, 3.0]], [1, 3], normalize=True)
    np.testing.assert_allclose(c.weights, [0.25, 0.75])
    np.testing.assert_allclose(np.linalg.norm(c.points, axis=1), 1.0)


def test_project_examples():
    cloud = make_cloud([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    p = project(E12, cloud, 1e-6)
    assert p.angles.tolist() == [0.0]
    assert p.capped_indices.tolist() == [1]


def test_quarter_turn():
    p = project(E12, make_cloud([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]))
    np.testing.assert_allclose(p.angles, [0.25, 0.5])


def test_cap_redistribution():
    pts = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    p = project(E12, make_cloud(pts, [0.4, 0.3, 0.3]))
    np.testing.assert_allclose(p.weights, [0.5, 0.5])


def test_all_capped():
    with pytest.raises(AllPointsCapped):
        project(E12, make_cloud([[0.0, 0.0, 1.0]]))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        project_all(sample_slices(0, 2, 4), make_cloud([[1.0, 0.0, 0.0]]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 0.9))
def test_weight_conservation(seed, cap_fraction):
    rng = np.random.default_rng(seed)
    n = 20
    pts = rng.standard_normal((n, 3))
    k = int(cap_fraction * n)
    pts[:k, :2] = 0.0
    cloud = make_cloud(pts, rng.random(n) + 0.01, normalize=True)
    p = project(E12, cloud)
    assert abs(p.weights.sum() - 1) <= 1e-9
    assert p.angles.size == n - p.capped_indices.size
    assert p.capped_indices.size == k


def test_idempotence_on_slice_circle(rng):
    for d in (3, 4, 6):
        for U in sample_slices(11, 10, d).frames:
            phi = rng.random(16)
            z = np.stack([np.cos(2 * np.pi * phi), np.sin(2 * np.pi * phi)], axis=1)
            p = project(U, make_cloud(z @ U.T, normalize=True))
            diff = p.angles - phi
            assert np.max(np.abs(diff - np.rint(diff))) <= 1e-12


def test_rotation_covariance(rng):
    for d in (3, 5):
        slices = sample_slices(4, 20, d)
        cloud = make_cloud(rng.standard_normal((30, d)), normalize=True)
        R = random_rotation(rng, d)
        a1, _, k1 = project_all(slices, make_cloud(cloud.points @ R.T, normalize=True))
        a2, _, k2 = project_all(rotate_slices(slices, R), cloud)
        assert np.array_equal(k1, k2)
        diff = a1 - a2
        assert np.max(np.abs(diff - np.rint(diff))[~k1]) <= 1e-12


def test_d2_chart_is_identity(rng):
    # in d = 2 every rotation frame reads angles unchanged and every reflection negates them
    phi = rng.random(10)
    pts = np.stack([np.cos(2 * np.pi * phi), np.sin(2 * np.pi * phi)], axis=1)
    cloud = make_cloud(pts, normalize=True)
    slices = sample_slices(9, 40, 2)
    angles, _, _ = project_all(slices, cloud)
    for U, a in zip(slices.frames, angles):
        target = phi if np.linalg.det(U) > 0 else -phi
        diff = a - target
        assert np.max(np.abs(diff - np.rint(diff))) <= 1e-12


def test_slices_from_frames_validates():
    with pytest.raises(ValueError):
        slices_from_frames(np.ones((1, 3, 2)))
    s = slices_from_frames(E12)
    assert s.L == 1 and s.d == 3 and len(s.digest) == 64


def test_random_rotation(rng):
    R = random_rotation(rng, 4)
    np.testing.assert_allclose(R @ R.T, np.eye(4), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0)
