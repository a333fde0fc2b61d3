"""Moment errors, transport distances, closed forms, inequality checks."""

import itertools
import math

import numpy as np
import pytest

from mirrorlangevin import diagnostics as dg
from mirrorlangevin import fokker_planck as fp
from mirrorlangevin.diagnostics import (
    EstimationError,
    GaussianParams,
    PreconditionError,
    SinkhornError,
    exact_w2_discrete,
    exp_concave_kl_check,
    gaussian_divergences,
    gaussian_tv_hellinger_1d,
    lojasiewicz_check,
    mean_error,
    mirror_poincare_residual,
    perturbation_kl_bound_check,
    scatter_error,
    sinkhorn_distance,
    transport_inequality_check,
)
from mirrorlangevin.mirrors import QuadraticMirror
from mirrorlangevin.potentials import Gaussian


class TestMomentErrors:
    def test_mean_error_hand_values(self):
        cloud = np.array([[0.0, 0.0], [2.0, 0.0]])
        assert mean_error(cloud, [0.0, 0.0]) == pytest.approx(1.0)
        assert mean_error(cloud, [1.0, 0.0]) == 0.0

    def test_mean_error_rejects_bad_cloud(self):
        with pytest.raises(ValueError):
            mean_error(np.zeros((0, 2)), [0.0, 0.0])
        with pytest.raises(ValueError):
            mean_error(np.zeros(5), [0.0])

    def test_scatter_error_identity_on_matching_scatter(self):
        # the normalization d / mean(x S^-1 x) makes the estimate equal the
        # raw second-moment matrix exactly, so a cloud whose raw scatter is
        # sigma scores zero
        rng = np.random.default_rng(0)
        x = rng.standard_normal((500, 3))
        s = x.T @ x / len(x)
        assert scatter_error(x, s) < 1e-25

    def test_scatter_error_equals_frobenius_error_of_raw_scatter(self):
        # radial = mean(x S^-1 x) = trace(S^-1 S) = d identically, so the
        # normalized estimate is the raw scatter and the score reduces to a
        # plain relative Frobenius error
        rng = np.random.default_rng(1)
        x = rng.standard_normal((400, 2))
        sig = np.diag([1.0, 2.0])
        s = x.T @ x / len(x)
        expect = float(np.sum((s - sig) ** 2) / np.sum(sig**2))
        assert scatter_error(x, sig) == pytest.approx(expect, rel=1e-10)

    def test_scatter_error_consistency(self):
        rng = np.random.default_rng(2)
        sig = np.array([[2.0, 0.5], [0.5, 1.0]])
        root = np.linalg.cholesky(sig)
        x = rng.standard_normal((20000, 2)) @ root.T
        assert scatter_error(x, sig) < 1e-3

    def test_scatter_error_errors(self):
        with pytest.raises(EstimationError, match="more samples"):
            scatter_error(np.eye(2), np.eye(2))
        with pytest.raises(EstimationError, match="rank"):
            scatter_error(np.zeros((10, 2)) + [1.0, 2.0] * np.ones((10, 1)), np.eye(2))


class TestExactW2:
    def test_matches_permutation_brute_force(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((6, 2))
        b = rng.standard_normal((6, 2))
        best = min(
            sum(float(np.sum((a[i] - b[p[i]]) ** 2)) for i in range(6))
            for p in itertools.permutations(range(6))
        )
        assert exact_w2_discrete(a, b) == pytest.approx(best / 6.0)

    def test_one_dimensional_sorted_matching(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((30, 1))
        b = rng.standard_normal((30, 1))
        expect = float(np.mean((np.sort(a[:, 0]) - np.sort(b[:, 0])) ** 2))
        assert exact_w2_discrete(a, b) == pytest.approx(expect)

    def test_translation(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((20, 2))
        shift = np.array([3.0, -1.0])
        assert exact_w2_discrete(a, a + shift) == pytest.approx(float(shift @ shift))

    def test_errors(self):
        with pytest.raises(ValueError, match="sizes differ"):
            exact_w2_discrete(np.zeros((3, 1)), np.zeros((4, 1)))
        with pytest.raises(ValueError, match="capped"):
            exact_w2_discrete(np.zeros((65, 1)), np.zeros((65, 1)))


class TestSinkhorn:
    def test_close_to_exact_w2(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((32, 2))
        b = rng.standard_normal((32, 2)) + 0.5
        exact = exact_w2_discrete(a, b)
        ent = sinkhorn_distance(a, b, eps=0.01, tol=1e-8)
        assert abs(ent - exact) < 5e-3 * (1.0 + exact)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((20, 2))
        b = rng.standard_normal((25, 2))
        assert sinkhorn_distance(a, b, 0.1) == pytest.approx(sinkhorn_distance(b, a, 0.1))

    def test_log_and_scaling_agree(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((15, 2))
        b = rng.standard_normal((15, 2))
        s = sinkhorn_distance(a, b, 0.5, mode="scaling")
        l = sinkhorn_distance(a, b, 0.5, mode="log")
        assert s == pytest.approx(l, rel=1e-6)

    def test_scaling_underflow_raises_log_survives(self):
        a = np.array([[0.0]])
        b = np.array([[100.0]])
        with pytest.raises(SinkhornError):
            sinkhorn_distance(a, b, 1.0, mode="scaling")
        assert sinkhorn_distance(a, b, 1.0, mode="log") == pytest.approx(1e4)
        # auto picks log when min cost / eps > 30
        assert sinkhorn_distance(a, b, 1.0, mode="auto") == pytest.approx(1e4)

    def test_warm_start_potentials_round_trip(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((20, 2))
        b = rng.standard_normal((20, 2)) + 4.0
        cost, (f, g) = sinkhorn_distance(a, b, 0.2, mode="log", return_potentials=True)
        cost2 = sinkhorn_distance(a, b, 0.2, mode="log", init_potentials=(f, g))
        assert cost2 == pytest.approx(cost, rel=1e-8)

    def test_validation(self):
        with pytest.raises(ValueError, match="epsilon"):
            sinkhorn_distance(np.zeros((2, 1)), np.zeros((2, 1)), 0.0)
        with pytest.raises(ValueError, match="dimensions"):
            sinkhorn_distance(np.zeros((2, 1)), np.zeros((2, 2)), 1.0)
        with pytest.raises(ValueError, match="mode"):
            sinkhorn_distance(np.zeros((2, 1)), np.zeros((2, 1)), 1.0, mode="hybrid")


class TestGaussianClosedForms:
    def test_translation_formulas(self):
        # for a mean shift m with identity covariances:
        # kl = m^2/2, chi2 = e^{m^2} - 1, w2 = m^2
        m = 0.5
        p = GaussianParams([m], [[1.0]])
        q = GaussianParams([0.0], [[1.0]])
        div = gaussian_divergences(p, q)
        assert div["kl"] == pytest.approx(m**2 / 2.0)
        assert div["chi2"] == pytest.approx(math.exp(m**2) - 1.0)
        assert div["w2sq"] == pytest.approx(m**2)

    def test_scale_formulas(self):
        # kl(N(0,s) || N(0,1)) = (s - 1 - ln s) / 2
        s = 2.0
        p = GaussianParams([0.0], [[s]])
        q = GaussianParams([0.0], [[1.0]])
        div = gaussian_divergences(p, q)
        assert div["kl"] == pytest.approx(0.5 * (s - 1.0 - math.log(s)))
        assert div["w2sq"] == pytest.approx((math.sqrt(s) - 1.0) ** 2)

    def test_chi2_infinite_sentinel(self):
        # chi2(p||q) requires 2 cov(q) - cov(p) positive definite
        p = GaussianParams([0.0], [[3.0]])
        q = GaussianParams([0.0], [[1.0]])
        assert gaussian_divergences(p, q)["chi2"] == math.inf

    def test_identical_gaussians_vanish(self):
        g = GaussianParams([1.0, -2.0], np.array([[2.0, 0.3], [0.3, 1.0]]))
        div = gaussian_divergences(g, g)
        assert abs(div["kl"]) < 1e-12
        assert abs(div["chi2"]) < 1e-10
        assert abs(div["w2sq"]) < 1e-10

    def test_tv_hellinger_quadrature(self):
        # tv(N(m,1), N(0,1)) = 2 Phi(m/2) - 1; H^2 = 2(1 - e^{-m^2/8})
        from scipy.stats import norm

        m = 0.8
        p = GaussianParams([m], [[1.0]])
        q = GaussianParams([0.0], [[1.0]])
        out = gaussian_tv_hellinger_1d(p, q)
        assert out["tv"] == pytest.approx(2.0 * norm.cdf(m / 2.0) - 1.0, abs=1e-8)
        assert out["hellinger2"] == pytest.approx(2.0 * (1.0 - math.exp(-m**2 / 8.0)), abs=1e-8)

    def test_validation(self):
        with pytest.raises(ValueError):
            GaussianParams([0.0, 0.0], [[1.0]])
        with pytest.raises(ValueError):
            gaussian_tv_hellinger_1d(
                GaussianParams([0.0, 0.0], np.eye(2)), GaussianParams([0.0, 0.0], np.eye(2))
            )


class TestInequalityChecks:
    def _pi(self, var=1.0, n=512):
        grid = fp.Grid1D(-8.0 * math.sqrt(var), 8.0 * math.sqrt(var), n)
        return fp.field_from_potential(grid, Gaussian(np.array([[var]])))

    def test_poincare_residual_gaussian(self):
        # var(x) = 1 and energy = E[(g')^2 / phi''] = 1 for g(x) = x under
        # N(0,1) with the quadratic mirror: the inequality is tight with C = 1
        pi = self._pi()
        x = pi.grid.centers()
        variance, energy = mirror_poincare_residual(
            pi, QuadraticMirror(1), x, g_prime=np.ones_like(x)
        )
        assert variance == pytest.approx(1.0, rel=1e-4)
        assert energy == pytest.approx(1.0, rel=1e-12)
        assert variance <= energy * (1.0 + 1e-3)

    def test_poincare_residual_shape_mismatch(self):
        pi = self._pi(n=64)
        with pytest.raises(ValueError, match="cell centers"):
            mirror_poincare_residual(pi, QuadraticMirror(1), np.zeros(10))

    def test_lojasiewicz_gaussian_tilt(self):
        pi = self._pi()
        mu = fp.tilted_field(pi.grid, Gaussian(np.array([[1.0]])), 0.3)
        assert lojasiewicz_check(pi, mu, c_p=1.0)

    def test_lojasiewicz_absolute_continuity(self):
        grid = fp.Grid1D(0.0, 1.0, 64)
        p = np.zeros(64)
        p[:32] = 1.0 / 32
        m = np.full(64, 1.0 / 64)
        with pytest.raises(ValueError, match="absolutely continuous"):
            lojasiewicz_check(fp.DensityField(grid, p), fp.DensityField(grid, m), 1.0)

    def test_transport_inequality_small_shift(self):
        p = GaussianParams([0.2], [[1.0]])
        q = GaussianParams([0.0], [[1.0]])
        check = transport_inequality_check(p, q, c_p=1.0)
        assert check.holds and check.holds_eight
        assert check.slack_nine > check.slack_eight > 0.0

    def test_transport_inequality_requires_finite_chi2(self):
        p = GaussianParams([0.0], [[3.0]])
        q = GaussianParams([0.0], [[1.0]])
        with pytest.raises(ValueError, match="finite"):
            transport_inequality_check(p, q, 1.0)

    def test_exp_concave_kl_bound(self):
        # b = -nu log(100 - x^2) makes e^{-b/nu} = 100 - x^2, concave and
        # positive on the grid, so the precondition passes and kl <= nu
        pi = self._pi()
        nu = 1.0
        kl, nu_out, holds = exp_concave_kl_check(
            pi, lambda x: -nu * math.log(100.0 - float(x) ** 2), nu=nu
        )
        assert nu_out == nu
        assert 0.0 <= kl <= nu
        assert holds

    def test_exp_concave_precondition_failure(self):
        pi = self._pi()
        with pytest.raises(PreconditionError, match="concavity"):
            exp_concave_kl_check(pi, lambda x: -float(x) ** 2, nu=0.1)

    def test_perturbation_kl_bound(self):
        pi = self._pi()
        assert perturbation_kl_bound_check(pi, 0.0)
        assert perturbation_kl_bound_check(pi, 0.05)
        assert perturbation_kl_bound_check(pi, 0.3)
        with pytest.raises(ValueError, match="nonnegative"):
            perturbation_kl_bound_check(pi, -0.1)
