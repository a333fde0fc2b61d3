"""Analytic potentials against finite-difference oracles and hand values."""

import math

import numpy as np
import pytest

from mirrorlangevin import geometry
from mirrorlangevin.potentials import (
    BoxBarrier,
    CoshPotential,
    DegeneracyError,
    DomainError,
    Gaussian,
    GeneralizedGaussian,
    LogisticPosterior,
    NormPlusQuadratic,
    ScaledPotential,
    nudge_off_origin,
)


def _families(rng):
    """(potential, interior point sampler, hessian fd step) triples.

    The narrow-box barrier's curvature varies on the scale of the boundary
    slack, so its stencil step must sit well below the half-width.
    """
    sig = np.diag([1.0, 2.0, 3.0])
    x_data = rng.standard_normal((40, 2)) * np.sqrt([10.0, 0.1])
    y_data = (rng.random(40) < 0.5).astype(float)
    box = BoxBarrier([0.5, 2.0])
    return [
        (Gaussian(sig), lambda: rng.standard_normal(3), None),
        (GeneralizedGaussian(sig, 0.75), lambda: rng.standard_normal(3) + 0.5, None),
        (GeneralizedGaussian(np.eye(2), 1.5), lambda: rng.standard_normal(2) + 0.2, None),
        (NormPlusQuadratic(2, 0.0005), lambda: rng.standard_normal(2) * 2 + 1.0, None),
        (LogisticPosterior(x_data, y_data), lambda: rng.standard_normal(2) * 0.3, None),
        (box, lambda: rng.uniform(-0.9, 0.9, 2) * np.array([0.5, 2.0]), None),
        (
            ScaledPotential(BoxBarrier([0.01, 1.0]), 1e-4),
            lambda: rng.uniform(-0.8, 0.8, 2) * np.array([0.01, 1.0]),
            3e-7,
        ),
    ]


class TestHandValues:
    def test_gaussian_value(self):
        pot = Gaussian(np.eye(2))
        assert pot.value(np.array([1.0, 0.0])) == pytest.approx(0.5)

    def test_gaussian_gradient_diag(self):
        pot = Gaussian(np.diag([1.0, 2.0]))
        assert np.allclose(pot.gradient(np.array([1.0, 2.0])), [1.0, 1.0])

    def test_gaussian_hessian_is_precision(self):
        sig = np.diag([1.0, 2.0])
        pot = Gaussian(sig)
        for x in (np.zeros(2), np.array([3.0, -1.0])):
            assert np.allclose(pot.hessian(x), np.diag([1.0, 0.5]))

    def test_gaussian_factor_diag(self):
        pot = Gaussian(np.diag([1.0, 4.0]))
        assert np.allclose(pot.hessian_factor(np.zeros(2)), np.diag([1.0, 0.5]))
        pot_i = Gaussian(np.eye(3))
        assert np.allclose(pot_i.hessian_factor(np.zeros(3)), np.eye(3))

    def test_gengauss_value(self):
        pot = GeneralizedGaussian(np.eye(2), 0.75)
        x = np.array([2.0, 0.0])  # |x|^2 = 4
        assert pot.value(x) == pytest.approx(4.0**0.75 / 2.0)
        assert pot.value(x) == pytest.approx(math.sqrt(2.0))

    def test_norm_plus_quadratic_value_at_center(self):
        pot = NormPlusQuadratic(2, 0.0005)
        assert pot.value(np.ones(2)) == pytest.approx(math.sqrt(2.0))

    def test_norm_plus_quadratic_hessian_unit_x(self):
        pot = NormPlusQuadratic(2, 0.0005)
        h = pot.hessian(np.array([1.0, 0.0]))
        assert np.allclose(h, [[0.001, 0.0], [0.0, 1.001]])

    def test_norm_plus_quadratic_factor_residual(self):
        rng = np.random.default_rng(5)
        pot = NormPlusQuadratic(2, 0.0005)
        for _ in range(10):
            x = rng.standard_normal(2) * 3
            m = pot.hessian_factor(x)
            assert np.linalg.norm(m @ m.T - pot.hessian(x)) < 1e-10

    def test_logistic_gradient_at_zero(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((30, 2))
        y = (rng.random(30) < 0.5).astype(float)
        pot = LogisticPosterior(x, y)
        expected = x.T @ (0.5 - y)
        assert np.allclose(pot.gradient(np.zeros(2)), expected)

    def test_cosh(self):
        pot = CoshPotential()
        assert pot.value(np.zeros(1)) == 0.0
        assert pot.gradient(np.array([1.0]))[0] == pytest.approx(math.sinh(1.0))
        assert pot.hessian(np.array([1.0]))[0, 0] == pytest.approx(math.cosh(1.0))
        y = np.array([2.3])
        assert np.allclose(pot.gradient(pot.dual_gradient(y)), y)


class TestOracleSweep:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(42)
        for pot, draw, _step in _families(rng):
            for _ in range(50):
                x = draw()
                g = pot.gradient(x)
                fd = geometry.finite_diff_gradient(pot.value, x, step=1e-6 * (1 + np.linalg.norm(x)))
                assert np.linalg.norm(g - fd) <= 1e-5 * (1.0 + np.linalg.norm(g)), type(pot).__name__

    def test_hessians_match_finite_differences(self):
        rng = np.random.default_rng(43)
        for pot, draw, step in _families(rng):
            for _ in range(50):
                x = draw()
                h = pot.hessian(x)
                s = step if step is not None else 1e-4 * (1 + np.linalg.norm(x))
                fd = geometry.finite_diff_hessian(pot.value, x, step=s)
                assert np.linalg.norm(h - fd) <= 1e-4 * (1.0 + np.linalg.norm(h)), type(pot).__name__

    def test_convexity_midpoints(self):
        rng = np.random.default_rng(44)
        for pot, draw, _step in _families(rng):
            for _ in range(50):
                x, y = draw(), draw()
                mid = pot.value(0.5 * (x + y))
                assert mid <= 0.5 * (pot.value(x) + pot.value(y)) + 1e-12

    def test_hessian_factor_multiply_back(self):
        rng = np.random.default_rng(45)
        for pot, draw, _step in _families(rng):
            x = draw()
            m = pot.hessian_factor(x)
            h = pot.hessian(x)
            assert np.linalg.norm(m @ m.T - h) <= 1e-10 * (1.0 + np.linalg.norm(h))


class TestDomainsAndErrors:
    def test_norm_plus_quadratic_origin(self):
        pot = NormPlusQuadratic(2, 0.1)
        with pytest.raises(DegeneracyError):
            pot.gradient(np.zeros(2))
        with pytest.raises(DegeneracyError):
            pot.hessian(np.zeros(2))
        # value is fine at the origin
        assert pot.value(np.zeros(2)) == pytest.approx(0.1 * 2.0)

    def test_nudge_off_origin(self):
        x = nudge_off_origin(np.zeros(3))
        assert x[0] == 1e-12 and np.all(x[1:] == 0)
        y = np.array([0.0, 2.0])
        assert nudge_off_origin(y) is y

    def test_gengauss_rejects_small_gamma(self):
        with pytest.raises(ValueError, match="gamma"):
            GeneralizedGaussian(np.eye(2), 0.5)

    def test_gengauss_hessian_degenerate_at_origin(self):
        pot = GeneralizedGaussian(np.eye(2), 0.75)
        with pytest.raises(DegeneracyError):
            pot.hessian(np.zeros(2))

    def test_gengauss_dual_gradient_round_trip(self):
        rng = np.random.default_rng(46)
        pot = GeneralizedGaussian(np.diag([1.0, 2.0]), 0.75)
        for _ in range(20):
            x = rng.standard_normal(2) + 0.3
            y = pot.gradient(x)
            assert np.allclose(pot.dual_gradient(y), x, atol=1e-10)

    def test_box_barrier_outside(self):
        box = BoxBarrier([0.01, 1.0])
        assert box.value(np.array([0.02, 0.0])) == math.inf
        assert not box.contains(np.array([0.02, 0.0]))
        with pytest.raises(DomainError):
            box.gradient(np.array([0.02, 0.0]))
        with pytest.raises(DomainError):
            box.hessian(np.array([0.0, 1.5]))

    def test_box_barrier_exp_concavity(self):
        # exp(-V/nu) with nu = number of axes is concave along segments.
        rng = np.random.default_rng(47)
        box = BoxBarrier([0.5, 2.0])
        nu = 2.0
        a = np.array([0.5, 2.0])
        for _ in range(50):
            x, y = (rng.uniform(-0.95, 0.95, 2) * a for _ in range(2))
            fx = math.exp(-box.value(x) / nu)
            fy = math.exp(-box.value(y) / nu)
            fm = math.exp(-box.value(0.5 * (x + y)) / nu)
            assert fm >= 0.5 * (fx + fy) - 1e-12

    def test_scaled_potential_exact_algebra(self):
        rng = np.random.default_rng(48)
        base = BoxBarrier([0.01, 1.0])
        pot = ScaledPotential(base, 1e-4)
        for _ in range(20):
            x = rng.uniform(-0.9, 0.9, 2) * np.array([0.01, 1.0])
            assert pot.value(x) == 1e-4 * base.value(x)
            assert np.array_equal(pot.gradient(x), 1e-4 * base.gradient(x))
            assert np.array_equal(pot.hessian(x), 1e-4 * base.hessian(x))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            Gaussian(np.eye(2)).value(np.ones(3))


class TestLogisticCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((25, 2))
        y = (rng.random(25) < 0.4).astype(float)
        pot = LogisticPosterior(x, y, prior_variance=5.0)
        path = tmp_path / "data.csv"
        pot.to_csv(path)
        back = LogisticPosterior.from_csv(path, prior_variance=5.0)
        assert np.array_equal(back.x, pot.x)
        assert np.array_equal(back.y, pot.y)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,y\n1,2,0\n")
        with pytest.raises(ValueError, match="header"):
            LogisticPosterior.from_csv(path)

    def test_bad_labels(self):
        with pytest.raises(ValueError, match="labels"):
            LogisticPosterior(np.ones((3, 2)), np.array([0.0, 2.0, 1.0]))
