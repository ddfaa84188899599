import numpy as np
import pytest

from lssot.circle import circ_abs, dirac, displacement_norm, from_points, grid, uniform_grid
from lssot.oracle import OracleConfig, alpha_values, cot_bruteforce, finite_diff_grad, lcot_dense
from lssot.slicer import make_cloud

from conftest import random_measure


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(alpha_grid=0)
    with pytest.raises(ValueError):
        OracleConfig(fd_step=0.0)


def test_alpha_grid():
    a = alpha_values(10)
    assert a[0] == -1.0 and a.size == 10
    np.testing.assert_allclose(np.diff(a), 0.2)


def test_identical_measures(rng):
    m = random_measure(rng, 12)
    _, cost = cot_bruteforce(m, m)
    assert cost <= 1e-9


def test_uniform_to_dirac():
    cfg = OracleConfig()
    alpha, _ = cot_bruteforce(uniform_grid(1000), dirac(0.3), cfg)
    assert abs(alpha + 0.2) <= 1 / cfg.alpha_grid


def test_diracs():
    cfg = OracleConfig()
    alpha, cost = cot_bruteforce(dirac(0.0), dirac(0.25), cfg)
    assert abs(cost - 0.0625) <= 2 / cfg.alpha_grid


def _rotated_costs(rng, cfg, wrap):
    a, b = rng.random(6) * 0.8, rng.random(8) * 0.8
    wa, wb = rng.random(6) + 0.1, rng.random(8) + 0.1
    s = rng.random() * 0.2 + (0.3 if wrap else 0.0)
    _, c0 = cot_bruteforce(from_points(a, wa), from_points(b, wb), cfg)
    _, c1 = cot_bruteforce(from_points(a + s, wa), from_points(b + s, wb), cfg)
    return c0, c1


def test_rotation_invariance_without_wrap(rng):
    # no atom crosses the cut, so both quantile functions just gain +s
    cfg = OracleConfig(alpha_grid=2000)
    for _ in range(10):
        c0, c1 = _rotated_costs(rng, cfg, wrap=False)
        assert abs(c0 - c1) <= 1e-9


def test_rotation_invariance_with_wrap(rng):
    # atoms crossing the cut move the minimizer off the rotation grid; the
    # cost is Lipschitz in alpha with constant <= 1, so the gap is bounded by the step
    cfg = OracleConfig(alpha_grid=10_000)
    for _ in range(10):
        c0, c1 = _rotated_costs(rng, cfg, wrap=True)
        assert abs(c0 - c1) <= 2.0 / cfg.alpha_grid


def test_dense_dirac():
    cfg = OracleConfig(dense_M=20_000)
    x = grid(cfg.dense_M)
    for t in (0.0, 0.4):
        v = lcot_dense(dirac(t), cfg).values
        np.testing.assert_allclose(circ_abs(v), circ_abs(x - t), atol=1e-12)


def test_dense_uniform():
    cfg = OracleConfig(dense_M=10_000)
    v = lcot_dense(uniform_grid(500), cfg).values
    assert np.max(circ_abs(v)) <= 1 / cfg.dense_M + 1 / 500


def test_dense_converges(rng):
    m = random_measure(rng, 30)
    full = displacement_norm(lcot_dense(m, OracleConfig(dense_M=100_000)))
    half = displacement_norm(lcot_dense(m, OracleConfig(dense_M=50_000)))
    assert abs(full - half) <= 2 / 100_000


def test_fd_constant_loss(rng):
    pts = rng.standard_normal((5, 3))
    g = finite_diff_grad(lambda c: 3.0, make_cloud(pts, normalize=True))
    assert np.max(np.abs(g)) <= 1e-9


def test_fd_linear_loss(rng):
    # loss = <a, x_0>; the Riemannian gradient is the tangent part of a
    cloud = make_cloud(rng.standard_normal((3, 3)), normalize=True)
    a = np.array([0.3, -1.0, 2.0])
    g = finite_diff_grad(lambda c: float(c.points[0] @ a), cloud)
    x = cloud.points[0]
    np.testing.assert_allclose(g[0], a - x * (a @ x), atol=1e-6)
    assert np.max(np.abs(g[1:])) <= 1e-9
