"""Sample and grid based convergence metrics plus functional-inequality checks.

Sample clouds are plain (n, d) arrays with uniform weights. Grid-density
checks reuse the Grid1D/DensityField types of the finite-volume solver.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import sqrtm
from scipy.optimize import linear_sum_assignment

from mirrorlangevin import geometry
from mirrorlangevin.fokker_planck import DensityField

EXACT_W2_MAX_POINTS = 64


class EstimationError(ValueError):
    """A sample-based estimator could not be formed (e.g. rank deficiency)."""


class SinkhornError(RuntimeError):
    """Scaling iterations underflowed; advises a larger epsilon or log mode."""


class PreconditionError(ValueError):
    """A checked analytic precondition (e.g. exp-concavity) failed."""


def _cloud(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValueError("sample cloud must be a nonempty (n, d) array")
    return a


# ---------------------------------------------------------------------------
# moment errors


def mean_error(cloud, target_mean) -> float:
    """Squared Euclidean distance of the sample mean from target_mean."""
    x = _cloud(cloud)
    d = x.mean(axis=0) - np.asarray(target_mean, dtype=float)
    return float(d @ d)


def scatter_error(cloud, sigma) -> float:
    """Relative squared Frobenius error of the normalized scatter estimate.

    The estimate is the raw second-moment matrix S rescaled by
    d / mean_i(x_i^T S^{-1} x_i); the convention is recorded in run metadata.
    """
    x = _cloud(cloud)
    n, d = x.shape
    if n <= d:
        raise EstimationError(f"need more samples than dimensions, got n={n}, d={d}")
    sig = geometry.check_spd_input(sigma)
    s = x.T @ x / n
    try:
        sinv_x = geometry.spd_solve(s, x.T)
    except geometry.SolveError as exc:
        raise EstimationError(f"raw second-moment matrix is rank deficient: {exc}") from exc
    radial = float(np.mean(np.sum(x.T * sinv_x, axis=0)))
    est = d * s / radial
    return float(np.sum((est - sig) ** 2) / np.sum(sig**2))


# ---------------------------------------------------------------------------
# optimal transport


def _cost_matrix(a, b) -> np.ndarray:
    aa = np.sum(a**2, axis=1)[:, None]
    bb = np.sum(b**2, axis=1)[None, :]
    c = aa + bb - 2.0 * a @ b.T
    np.maximum(c, 0.0, out=c)
    return c


def sinkhorn_distance(
    a,
    b,
    eps,
    tol=1e-9,
    max_iter=10000,
    mode="auto",
    init_potentials=None,
    return_potentials=False,
):
    """Entropic-regularized transport cost <P, C> between uniform clouds.

    Alternating scaling iterations until the marginal violation drops below
    ``tol``. ``mode`` is "scaling", "log", or "auto" (log domain whenever
    min cost / eps > 30, where plain scaling would underflow). In log mode,
    ``init_potentials`` warm-starts the dual pair (f, g); without a warm
    start the pair is initialized by a short epsilon-annealing sweep, which
    does not change the fixed point. ``return_potentials`` switches the
    return value to (cost, (f, g)).
    """
    a, b = _cloud(a), _cloud(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("clouds have different dimensions")
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    c = _cost_matrix(a, b)
    n, m = c.shape
    wa, wb = np.full(n, 1.0 / n), np.full(m, 1.0 / m)

    if mode == "auto":
        mode = "log" if float(c.min()) / eps > 30.0 else "scaling"

    if mode == "scaling":
        k = np.exp(-c / eps)
        u = np.ones(n)
        for _ in range(int(max_iter)):
            kv = k.T @ u
            if np.any(kv <= 0.0) or np.any(~np.isfinite(kv)):
                raise SinkhornError(
                    "Gibbs kernel underflowed; increase epsilon or use log mode"
                )
            v = wb / kv
            ku = k @ v
            if np.any(ku <= 0.0) or np.any(~np.isfinite(ku)):
                raise SinkhornError(
                    "Gibbs kernel underflowed; increase epsilon or use log mode"
                )
            u = wa / ku
            if np.max(np.abs(v * (k.T @ u) - wb)) < tol:
                break
        p = u[:, None] * k * v[None, :]
        cost = float(np.sum(p * c))
        if return_potentials:
            return cost, (eps * np.log(u), eps * np.log(v))
        return cost

    if mode != "log":
        raise ValueError(f"unknown mode {mode!r}")
    log_wa, log_wb = np.log(wa), np.log(wb)
    from scipy.special import logsumexp

    if init_potentials is not None:
        f = np.asarray(init_potentials[0], dtype=float).copy()
        g = np.asarray(init_potentials[1], dtype=float).copy()
    else:
        # Anneal epsilon downward for a cheap warm start; the loop below
        # still iterates at the requested epsilon until tol is met.
        f, g = np.zeros(n), np.zeros(m)
        e = max(float(c.max()), eps)
        while e > eps:
            e = max(eps, 0.5 * e)
            for _ in range(5):
                f = -e * logsumexp((g[None, :] - c) / e + log_wb[None, :], axis=1)
                g = -e * logsumexp((f[:, None] - c) / e + log_wa[:, None], axis=0)

    for it in range(int(max_iter)):
        # The f-update logsumexp doubles as the row-marginal check; the
        # check is only meaningful once a g-update has made the column
        # marginals exact, hence the it > 0 guard.
        lse = logsumexp((g[None, :] - c) / eps + log_wb[None, :], axis=1)
        if it > 0 and np.max(np.abs(np.exp(f / eps + log_wa + lse) - wa)) < tol:
            break
        f = -eps * lse
        g = -eps * logsumexp((f[:, None] - c) / eps + log_wa[:, None], axis=0)
    log_p = (f[:, None] + g[None, :] - c) / eps + log_wa[:, None] + log_wb[None, :]
    p = np.exp(log_p)
    cost = float(np.sum(p * c))
    if return_potentials:
        return cost, (f, g)
    return cost


def exact_w2_discrete(a, b) -> float:
    """Exact squared 2-Wasserstein distance between equal-size uniform clouds.

    Solved as an optimal assignment; capped at 64 points so the solve stays
    an oracle-scale computation.
    """
    a, b = _cloud(a), _cloud(b)
    if a.shape != b.shape:
        raise ValueError(f"cloud sizes differ: {a.shape} vs {b.shape}")
    if a.shape[0] > EXACT_W2_MAX_POINTS:
        raise ValueError(f"exact solver capped at {EXACT_W2_MAX_POINTS} points")
    c = _cost_matrix(a, b)
    rows, cols = linear_sum_assignment(c)
    return float(c[rows, cols].mean())


# ---------------------------------------------------------------------------
# closed-form Gaussian divergences


@dataclass(frozen=True)
class GaussianParams:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        cov = geometry.check_spd_input(np.atleast_2d(self.covariance))
        geometry.spd_factor(cov)
        object.__setattr__(self, "covariance", cov)
        if self.mean.shape[0] != cov.shape[0]:
            raise ValueError("mean and covariance dimensions differ")


def _logdet(a) -> float:
    m = geometry.spd_factor(a)
    return 2.0 * float(np.sum(np.log(np.diag(m))))


def gaussian_divergences(p: GaussianParams, q: GaussianParams) -> dict:
    """chi2(p||q), kl(p||q), and squared W2 between two Gaussians.

    chi2 is finite only when 2*cov(q) - cov(p) is positive definite;
    otherwise the inf sentinel is returned.
    """
    if p.mean.shape != q.mean.shape:
        raise ValueError("dimension mismatch")
    d = p.mean.shape[0]
    delta = q.mean - p.mean

    qinv_p = geometry.spd_solve(q.covariance, p.covariance)
    kl = 0.5 * (
        float(np.trace(qinv_p))
        + float(delta @ geometry.spd_solve(q.covariance, delta))
        - d
        + _logdet(q.covariance)
        - _logdet(p.covariance)
    )

    mid = 2.0 * q.covariance - p.covariance
    try:
        chi2 = (
            math.exp(
                _logdet(q.covariance)
                - 0.5 * (_logdet(p.covariance) + _logdet(mid))
                + float(delta @ geometry.spd_solve(mid, delta))
            )
            - 1.0
        )
    except (geometry.FactorizationError, geometry.SolveError):
        chi2 = math.inf

    rq = np.real(sqrtm(q.covariance))
    cross = np.real(sqrtm(rq @ p.covariance @ rq))
    w2sq = float(delta @ delta) + float(
        np.trace(p.covariance + q.covariance - 2.0 * cross)
    )
    return {"chi2": chi2, "kl": kl, "w2sq": max(w2sq, 0.0)}


def gaussian_tv_hellinger_1d(p: GaussianParams, q: GaussianParams) -> dict:
    """TV and squared Hellinger between 1-D Gaussians by adaptive quadrature."""
    if p.mean.shape[0] != 1:
        raise ValueError("quadrature divergences implemented for 1-D only")
    m1, s1 = float(p.mean[0]), math.sqrt(float(p.covariance[0, 0]))
    m2, s2 = float(q.mean[0]), math.sqrt(float(q.covariance[0, 0]))

    def pdf(x, m, s):
        return math.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))

    lo = min(m1 - 10 * s1, m2 - 10 * s2)
    hi = max(m1 + 10 * s1, m2 + 10 * s2)
    tv, _ = quad(lambda x: abs(pdf(x, m1, s1) - pdf(x, m2, s2)), lo, hi, limit=200)
    h2, _ = quad(
        lambda x: (math.sqrt(pdf(x, m1, s1)) - math.sqrt(pdf(x, m2, s2))) ** 2,
        lo,
        hi,
        limit=200,
    )
    return {"tv": 0.5 * tv, "hellinger2": h2}


# ---------------------------------------------------------------------------
# grid-quadrature inequality checks


def _grid_arrays(field: DensityField):
    return field.grid.centers(), field.grid.spacing, field.cell_masses


def mirror_poincare_residual(
    pi: DensityField, mirror, g, g_prime=None, curvature=None
) -> tuple[float, float]:
    """(variance of g under pi, curvature-weighted Dirichlet energy).

    g is an array of test-function values at the cell centers; its derivative
    is a centered difference unless ``g_prime`` supplies exact values.
    ``curvature`` optionally caches the mirror's second derivative at the
    centers. The curvature-weighted Poincare inequality asserts
    variance <= C * energy.
    """
    x, dx, w = _grid_arrays(pi)
    g = np.asarray(g, dtype=float)
    if g.shape != x.shape:
        raise ValueError("test function must be sampled at the cell centers")
    mean = float(w @ g)
    variance = float(w @ (g - mean) ** 2)
    gp = np.gradient(g, dx) if g_prime is None else np.asarray(g_prime, dtype=float)
    if curvature is None:
        curvature = np.array([float(mirror.hess(np.array([xi]))[0, 0]) for xi in x])
    energy = float(w @ (gp**2 / curvature))
    return variance, energy


def lojasiewicz_check(pi: DensityField, mu: DensityField, c_p: float, slack=1e-8) -> bool:
    """chi2(mu||pi)^(3/2) <= (9 c_p / 4) * integral of |d/dx (mu/pi)|^2 dmu."""
    if mu.grid != pi.grid:
        raise ValueError("fields live on different grids")
    x, dx, p = _grid_arrays(pi)
    m = mu.cell_masses
    if np.any((p == 0.0) & (m > 0.0)):
        raise ValueError("mu is not absolutely continuous with respect to pi")
    ratio = np.divide(m, p, out=np.zeros_like(m), where=p > 0)
    chi2 = float(m @ ratio) - 1.0
    energy = float(m @ np.gradient(ratio, dx) ** 2)
    return chi2 ** 1.5 <= 2.25 * c_p * energy + slack


@dataclass(frozen=True)
class TransportCheck:
    holds: bool  # W2^2 <= 9 c_p sqrt(chi2)
    holds_eight: bool  # the constant-8 literature variant
    slack_nine: float
    slack_eight: float


def transport_inequality_check(p: GaussianParams, q: GaussianParams, c_p: float) -> TransportCheck:
    """Check W2^2(p, q) <= 9 c_p sqrt(chi2(p||q)), and the 8-constant form."""
    div = gaussian_divergences(p, q)
    if not math.isfinite(div["chi2"]):
        raise ValueError("chi-squared divergence must be finite for this check")
    root = math.sqrt(max(div["chi2"], 0.0))
    w2 = div["w2sq"]
    return TransportCheck(
        holds=w2 <= 9.0 * c_p * root + 1e-12,
        holds_eight=w2 <= 8.0 * c_p * root + 1e-12,
        slack_nine=9.0 * c_p * root - w2,
        slack_eight=8.0 * c_p * root - w2,
    )


def exp_concave_kl_check(pi: DensityField, b, nu: float, slack=1e-8):
    """KL of the reweighted density e^{-b} pi from pi, checked against nu.

    b must be nu-exp-concave: e^{-b/nu} concave on the support, validated by
    midpoint concavity over sampled center pairs. Returns (kl, nu, holds).
    """
    if not nu > 0:
        raise ValueError("nu must be positive")
    x, _, p = _grid_arrays(pi)
    support = p > 0
    xs = x[support]
    f = np.exp(-np.array([float(b(xi)) for xi in xs]) / nu)
    stride = max(1, xs.size // 64)
    probe = xs[::stride]
    fp = f[::stride]
    for i in range(len(probe) - 1):
        mid = 0.5 * (probe[i] + probe[i + 1])
        if math.exp(-float(b(mid)) / nu) < 0.5 * (fp[i] + fp[i + 1]) - 1e-10:
            raise PreconditionError(
                f"e^(-b/nu) fails midpoint concavity between x = {probe[i]:.4g} "
                f"and x = {probe[i + 1]:.4g}"
            )

    weights = np.zeros_like(p)
    weights[support] = p[support] * np.exp(-np.array([float(b(xi)) for xi in xs]))
    total = weights.sum()
    if total <= 0:
        raise ValueError("reweighted density vanishes")
    tilde = weights / total
    pos = tilde > 0
    kl = float(tilde[pos] @ np.log(tilde[pos] / p[pos]))
    return kl, nu, kl <= nu + slack


def perturbation_kl_bound_check(pi: DensityField, beta: float, slack=1e-10) -> bool:
    """KL(pi || pi_beta) <= beta * second moment, pi_beta ~ e^{-beta x^2} pi."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    x, _, p = _grid_arrays(pi)
    weights = p * np.exp(-beta * x**2)
    tilted = weights / weights.sum()
    pos = p > 0
    kl = float(p[pos] @ np.log(p[pos] / tilted[pos]))
    second_moment = float(p @ x**2)
    return kl <= beta * second_moment + slack
