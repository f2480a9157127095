"""Manifold update steps: invariants, fixed points, descent sweeps."""

import numpy as np
import pytest

from geomix.decoder import MixtureParams
from geomix.manifold import poincare_dist, project_to_sphere, sphere_dist
from geomix.optimizer import OptimConfig, rsgd_ball_step, rsgd_sphere_step, sgd_step


class TestSphereStep:
    def test_zero_gradient_fixed_point(self):
        rng = np.random.default_rng(0)
        w = 0.5
        z = project_to_sphere(rng.standard_normal((8, 4)), w)
        out = rsgd_sphere_step(z, np.zeros_like(z), 0.1, w)
        assert np.array_equal(out, z)

    def test_output_stays_on_sphere(self):
        rng = np.random.default_rng(1)
        w = 0.5
        for _ in range(20):
            z = project_to_sphere(rng.standard_normal((10, 3)), w)
            g = rng.standard_normal((10, 3)) * rng.uniform(0.1, 10)
            out = rsgd_sphere_step(z, g, 0.05, w)
            assert np.allclose(np.linalg.norm(out, axis=1), w, atol=1e-12)

    def test_tangent_projection_orthogonal(self):
        # z . (I - z z^T / w^2) g = 0 for on-sphere z
        rng = np.random.default_rng(2)
        w = 0.5
        z = project_to_sphere(rng.standard_normal((50, 4)), w)
        g = rng.standard_normal((50, 4))
        zg = np.sum(z * g, axis=1, keepdims=True)
        tangent = g - z * zg / (w * w)
        dots = np.sum(z * tangent, axis=1)
        assert np.all(np.abs(dots) < 1e-9)

    def test_descent_on_distance_objective(self):
        # f(z) = dist_S(z, target)^2 decreases over 100 random starts
        rng = np.random.default_rng(3)
        w = 0.5
        target = project_to_sphere(rng.standard_normal((1, 3)), w)[0]
        wins = 0
        for _ in range(100):
            z = project_to_sphere(rng.standard_normal((1, 3)), w)
            d0 = sphere_dist(z[0], target, w)
            if d0 < 1e-3 or d0 > np.pi - 1e-3:
                wins += 1
                continue
            # grad of dist^2 wrt z through arccos(z.t / w^2)
            u = np.clip(z[0] @ target / (w * w), -1 + 1e-12, 1 - 1e-12)
            dist = np.arccos(u)
            g = 2.0 * dist * (-1.0 / np.sqrt(1.0 - u * u)) * target / (w * w)
            z1 = rsgd_sphere_step(z, g[None, :], 0.01, w, prefactor=False)
            if sphere_dist(z1[0], target, w) < d0:
                wins += 1
        assert wins == 100

    def test_prefactor_toggle_changes_step(self):
        rng = np.random.default_rng(4)
        w = 0.5
        z = project_to_sphere(rng.standard_normal((5, 3)), w)
        g = rng.standard_normal((5, 3))
        a = rsgd_sphere_step(z, g, 0.05, w, prefactor=True)
        b = rsgd_sphere_step(z, g, 0.05, w, prefactor=False)
        assert not np.allclose(a, b)

    def test_radial_gradient_is_noop_without_prefactor(self):
        # purely radial gradient has zero tangent component
        w = 0.5
        z = np.array([[w, 0.0]])
        g = np.array([[3.0, 0.0]])
        out = rsgd_sphere_step(z, g, 0.1, w, prefactor=False)
        assert np.allclose(out, z, atol=1e-12)


class TestBallStep:
    def test_zero_gradient_fixed_point(self):
        rng = np.random.default_rng(5)
        z = rng.standard_normal((8, 4)) * 0.3
        out = rsgd_ball_step(z, np.zeros_like(z), 0.1)
        assert np.array_equal(out, z)

    def test_origin_conformal_factor_quarter(self):
        # at z = 0 the scaling is ((1-0)/2)^2 = 1/4
        z = np.zeros((1, 3))
        g = np.array([[1.0, 2.0, -1.0]])
        out = rsgd_ball_step(z, g, 0.2)
        assert np.allclose(out, -0.2 * 0.25 * g, atol=1e-14)

    def test_output_stays_in_ball(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            z = rng.standard_normal((10, 4))
            z = z / np.linalg.norm(z, axis=1, keepdims=True) * rng.uniform(0, 0.999)
            g = rng.standard_normal((10, 4)) * rng.uniform(0.1, 100)
            out = rsgd_ball_step(z, g, 0.5)
            assert np.all(np.linalg.norm(out, axis=1) < 1.0)

    def test_descent_on_distance_objective(self):
        # f(z) = dist_H(z, target)^2 decreases over 100 random starts
        rng = np.random.default_rng(7)
        target = np.array([0.3, -0.2, 0.1])
        wins = 0
        for _ in range(100):
            z = rng.standard_normal((1, 3)) * 0.25
            d0 = poincare_dist(z[0], target)
            if d0 < 1e-3:
                wins += 1
                continue
            h = 1e-7
            g = np.zeros(3)
            for k in range(3):
                zp, zm = z[0].copy(), z[0].copy()
                zp[k] += h
                zm[k] -= h
                g[k] = (
                    poincare_dist(zp, target) ** 2 - poincare_dist(zm, target) ** 2
                ) / (2 * h)
            z1 = rsgd_ball_step(z, g[None, :], 0.05)
            if poincare_dist(z1[0], target) < d0:
                wins += 1
        assert wins == 100

    def test_boundary_points_barely_move(self):
        # conformal factor collapses near the boundary
        z = np.array([[0.999, 0.0]])
        g = np.array([[10.0, 10.0]])
        out = rsgd_ball_step(z, g, 0.1)
        assert np.linalg.norm(out - z) < 1e-5


class TestSgdStep:
    def test_worked_example(self):
        assert sgd_step(1.0, 2.0, 0.1) == pytest.approx(0.8)

    def test_none_gradient_unchanged(self):
        x = np.array([1.0, 2.0])
        assert sgd_step(x, None, 0.1) is x

    def test_array_step(self):
        x = np.array([1.0, -1.0])
        g = np.array([0.5, -0.5])
        assert np.allclose(sgd_step(x, g, 0.2), [0.9, -0.9])

    def test_gamma_stays_in_unit_interval_under_adversarial_steps(self):
        # raw gamma can walk anywhere; the constrained value never leaves (0,1)
        rng = np.random.default_rng(8)
        raw = 0.0
        for _ in range(10_000):
            raw = sgd_step(raw, rng.standard_normal() * 50.0, 0.5)
            p = MixtureParams(0.0, 0.0, 0.0, 0.0, raw)
            assert 0.0 <= p.gamma <= 1.0

    def test_positivity_of_softplus_params_under_adversarial_steps(self):
        rng = np.random.default_rng(9)
        raw = 0.0
        for _ in range(10_000):
            raw = sgd_step(raw, rng.standard_normal() * 50.0, 0.5)
            p = MixtureParams(raw, raw, raw, raw, 0.0)
            assert p.slope_hom >= 0.0
            assert p.slope_rank >= 0.0


class TestOptimConfig:
    def test_defaults(self):
        cfg = OptimConfig()
        assert cfg.eta == 0.05
        assert cfg.epochs == 200
        assert cfg.patience == 20
        assert cfg.batch_edges is None
        assert cfg.rsgd_prefactor is True
        assert cfg.dense_max_nodes == 800
