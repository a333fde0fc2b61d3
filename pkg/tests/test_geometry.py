"""SPD factor/solve oracles and finite-difference stencils."""

import numpy as np
import pytest

from mirrorlangevin import geometry


def random_spd(rng, d):
    b = rng.standard_normal((d, d))
    return b.T @ b + np.eye(d)


class TestSpdFactor:
    def test_identity(self):
        m = geometry.spd_factor(np.eye(3))
        assert np.allclose(m, np.eye(3))

    def test_diagonal_square_roots(self):
        m = geometry.spd_factor(np.diag([4.0, 9.0]))
        assert np.allclose(m, np.diag([2.0, 3.0]))

    def test_multiply_back_residual(self):
        rng = np.random.default_rng(7)
        a = random_spd(rng, 5)
        m = geometry.spd_factor(a)
        assert np.linalg.norm(m @ m.T - a) < 1e-10 * np.linalg.norm(a)

    def test_lower_triangular(self):
        rng = np.random.default_rng(8)
        m = geometry.spd_factor(random_spd(rng, 6))
        assert np.allclose(m, np.tril(m))

    def test_rejects_indefinite(self):
        with pytest.raises(geometry.FactorizationError, match="pivot"):
            geometry.spd_factor(np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            geometry.spd_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_nonsquare_and_nonfinite(self):
        with pytest.raises(ValueError):
            geometry.spd_factor(np.ones((2, 3)))
        with pytest.raises(ValueError):
            geometry.spd_factor(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_huge_dynamic_range_diagonal(self):
        # Benign per-axis scale differences (barrier Hessians near a face)
        # must factor cleanly.
        a = np.diag([4e10, 2.8e-4])
        m = geometry.spd_factor(a)
        assert np.allclose(m @ m.T, a)


class TestSpdSolve:
    def test_identity(self):
        b = np.array([1.0, 2.0, 3.0])
        assert np.allclose(geometry.spd_solve(np.eye(3), b), b)

    def test_diagonal(self):
        x = geometry.spd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_multiply_back(self):
        rng = np.random.default_rng(11)
        a = random_spd(rng, 8)
        b = rng.standard_normal(8)
        x = geometry.spd_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_matrix_rhs(self):
        rng = np.random.default_rng(12)
        a = random_spd(rng, 4)
        x = geometry.spd_solve(a, np.eye(4))
        assert np.allclose(a @ x, np.eye(4), atol=1e-10)

    def test_round_trip_many_dims(self):
        rng = np.random.default_rng(13)
        for i in range(100):
            d = 1 + i % 16
            a = random_spd(rng, d)
            x = rng.standard_normal(d)
            got = geometry.spd_solve(a, a @ x)
            assert np.linalg.norm(got - x) <= 1e-8 * (1 + np.linalg.norm(x))

    def test_singular_raises(self):
        with pytest.raises(geometry.SolveError):
            geometry.spd_solve(np.zeros((2, 2)), np.ones(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            geometry.spd_solve(np.eye(3), np.ones(2))


class TestFiniteDifferences:
    def test_gradient_constant(self):
        g = geometry.finite_diff_gradient(lambda x: 3.0, np.zeros(4))
        assert np.allclose(g, 0.0)

    def test_gradient_quadratic(self):
        g = geometry.finite_diff_gradient(
            lambda x: 0.5 * float(x @ x), np.array([1.0, 2.0]), step=1e-5
        )
        assert np.allclose(g, [1.0, 2.0], atol=1e-8)

    def test_hessian_quadratic(self):
        q = np.array([[2.0, 0.3], [0.3, 1.0]])
        h = geometry.finite_diff_hessian(lambda x: 0.5 * float(x @ q @ x), np.array([0.4, -0.2]))
        assert np.allclose(h, q, atol=1e-6)

    def test_hessian_constant(self):
        h = geometry.finite_diff_hessian(lambda x: -1.5, np.ones(3))
        assert np.allclose(h, 0.0, atol=1e-6)

    def test_hessian_symmetric(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(3)
        h = geometry.finite_diff_hessian(lambda v: float(np.sum(v**4) + v[0] * v[1]), x)
        assert np.allclose(h, h.T)

    def test_nonfinite_raises(self):
        with pytest.raises(geometry.OracleError):
            geometry.finite_diff_gradient(lambda x: np.inf, np.zeros(2))
        with pytest.raises(geometry.OracleError):
            geometry.finite_diff_hessian(
                lambda x: np.inf if np.any(x != 0) else 0.0, np.zeros(2)
            )
