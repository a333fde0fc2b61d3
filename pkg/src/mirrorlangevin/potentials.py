"""Target potentials V with analytic value, gradient, Hessian, and factor.

Each family is a small immutable class; evaluations are pure. Densities are
always understood as pi ~ exp(-V), unnormalized.
"""

import csv
import math

import numpy as np

from mirrorlangevin import geometry

# Perturbation applied when an iterate lands exactly on a non-differentiable
# point (probability zero in exact arithmetic, possible in floating point).
ORIGIN_PERTURBATION = 1e-12


class DomainError(ValueError):
    """Evaluation outside the effective domain of the potential."""


class DegeneracyError(ValueError):
    """Gradient or Hessian requested at a point where it is undefined."""


def nudge_off_origin(x: np.ndarray) -> np.ndarray:
    """Move an exact origin hit by 1e-12 along the first coordinate."""
    if np.any(x != 0.0):
        return x
    out = x.copy()
    out[0] = ORIGIN_PERTURBATION
    return out


class Potential:
    """Base class: a convex potential on (a subset of) R^d."""

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian_factor(self, x: np.ndarray) -> np.ndarray:
        """Some M with M M^T = hessian(x). Default: Cholesky of the Hessian."""
        return geometry.spd_factor(self.hessian(x))

    def dual_gradient(self, y: np.ndarray):
        """Closed-form inverse of the gradient map, where one exists."""
        raise NotImplementedError(f"{type(self).__name__} has no closed-form dual gradient")

    def contains(self, x: np.ndarray) -> bool:
        """True if x is in the interior of the effective domain."""
        return bool(np.all(np.isfinite(x)))

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x


class Gaussian(Potential):
    """V(x) = <x, Sigma^{-1} x> / 2."""

    def __init__(self, sigma: np.ndarray):
        self.sigma = geometry.check_spd_input(sigma)
        self.dim = self.sigma.shape[0]
        self._chol = geometry.spd_factor(self.sigma)
        self._prec = geometry.spd_solve(self.sigma, np.eye(self.dim))
        self._prec = 0.5 * (self._prec + self._prec.T)
        self._prec_chol = geometry.spd_factor(self._prec)

    def value(self, x):
        x = self._check(x)
        return 0.5 * float(x @ self._prec @ x)

    def gradient(self, x):
        return self._prec @ self._check(x)

    def hessian(self, x):
        self._check(x)
        return self._prec.copy()

    def hessian_factor(self, x):
        self._check(x)
        return self._prec_chol.copy()

    def dual_gradient(self, y):
        return self.sigma @ self._check(y)


class GeneralizedGaussian(Potential):
    """V(x) = <x, Sigma^{-1} x>^gamma / 2 with gamma > 1/2."""

    def __init__(self, sigma: np.ndarray, gamma: float):
        if not gamma > 0.5:
            raise ValueError(f"gamma must exceed 1/2 for integrability, got {gamma}")
        self.sigma = geometry.check_spd_input(sigma)
        self.gamma = float(gamma)
        self.dim = self.sigma.shape[0]
        self._prec = geometry.spd_solve(self.sigma, np.eye(self.dim))
        self._prec = 0.5 * (self._prec + self._prec.T)

    def _quad(self, x):
        return float(x @ self._prec @ x)

    def value(self, x):
        x = self._check(x)
        return 0.5 * self._quad(x) ** self.gamma

    def gradient(self, x):
        x = self._check(x)
        q = self._quad(x)
        if q == 0.0:
            if self.gamma >= 1.0:
                return np.zeros(self.dim)
            x = nudge_off_origin(x)
            q = self._quad(x)
        return self.gamma * q ** (self.gamma - 1.0) * (self._prec @ x)

    def hessian(self, x):
        x = self._check(x)
        q = self._quad(x)
        if q == 0.0:
            if self.gamma == 1.0:
                return self._prec.copy()
            raise DegeneracyError(
                f"GeneralizedGaussian(gamma={self.gamma}) Hessian is undefined at the origin"
            )
        px = self._prec @ x
        g = self.gamma
        return g * q ** (g - 1.0) * self._prec + 2.0 * g * (g - 1.0) * q ** (g - 2.0) * np.outer(
            px, px
        )

    def dual_gradient(self, y):
        y = self._check(y)
        q = float(y @ self.sigma @ y)
        if q == 0.0:
            return np.zeros(self.dim)
        # Solve gamma * s^(2 gamma - 1) * q^(gamma - 1) = 1 for the scaling of
        # x = s * Sigma y.
        s = (self.gamma * q ** (self.gamma - 1.0)) ** (-1.0 / (2.0 * self.gamma - 1.0))
        return s * (self.sigma @ y)


class NormPlusQuadratic(Potential):
    """V(x) = ||x|| + beta * ||x - center||^2.

    The Hessian of the norm term is (1/||x||) (I - unit(x) unit(x)^T), which
    blows up near the origin; the quadratic term adds 2 beta I.
    """

    def __init__(self, dim: int, beta: float, center: np.ndarray | None = None):
        if beta < 0:
            raise ValueError(f"beta must be nonnegative, got {beta}")
        self.dim = int(dim)
        self.beta = float(beta)
        self.center = (
            np.ones(self.dim) if center is None else np.asarray(center, dtype=float)
        )
        if self.center.shape != (self.dim,):
            raise ValueError("center has wrong dimension")

    def value(self, x):
        x = self._check(x)
        d = x - self.center
        return float(np.linalg.norm(x) + self.beta * (d @ d))

    def gradient(self, x):
        x = self._check(x)
        r = np.linalg.norm(x)
        if r == 0.0:
            raise DegeneracyError("NormPlusQuadratic gradient is undefined at the origin")
        return x / r + 2.0 * self.beta * (x - self.center)

    def hessian(self, x):
        x = self._check(x)
        r = np.linalg.norm(x)
        if r == 0.0:
            raise DegeneracyError("NormPlusQuadratic Hessian is undefined at the origin")
        u = x / r
        return (np.eye(self.dim) - np.outer(u, u)) / r + 2.0 * self.beta * np.eye(self.dim)


class LogisticPosterior(Potential):
    """Negative log-posterior of Bayesian logistic regression.

    V(theta) = ||theta||^2 / (2 v) - sum_i [y_i theta.x_i - log(1 + exp(theta.x_i))]
    with Gaussian prior variance v. Strongly convex, hence always SPD Hessian.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray, prior_variance: float = 10.0):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise ValueError("design matrix and labels have incompatible shapes")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise ValueError("labels must be 0/1")
        if not prior_variance > 0:
            raise ValueError(f"prior variance must be positive, got {prior_variance}")
        self.prior_variance = float(prior_variance)
        self.dim = self.x.shape[1]

    @classmethod
    def from_csv(cls, path, prior_variance: float = 10.0) -> "LogisticPosterior":
        """Load a dataset with header x1,...,xd,y and y in {0,1}."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[-1] != "y" or not all(
                h == f"x{i + 1}" for i, h in enumerate(header[:-1])
            ):
                raise ValueError(f"unexpected header {header}; want x1..xd,y")
            rows = [[float(v) for v in row] for row in reader]
        data = np.asarray(rows)
        return cls(data[:, :-1], data[:, -1], prior_variance)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(self.dim)] + ["y"])
            for xi, yi in zip(self.x, self.y):
                writer.writerow([repr(float(v)) for v in xi] + [int(yi)])

    def _logits(self, theta):
        return self.x @ theta

    def value(self, theta):
        theta = self._check(theta)
        t = self._logits(theta)
        # log(1 + e^t), stable for large |t|
        softplus = np.logaddexp(0.0, t)
        return float(theta @ theta / (2.0 * self.prior_variance) - self.y @ t + softplus.sum())

    def gradient(self, theta):
        from scipy.special import expit

        theta = self._check(theta)
        p = expit(self._logits(theta))
        return theta / self.prior_variance + self.x.T @ (p - self.y)

    def hessian(self, theta):
        from scipy.special import expit

        theta = self._check(theta)
        p = expit(self._logits(theta))
        w = p * (1.0 - p)
        return np.eye(self.dim) / self.prior_variance + (self.x * w[:, None]).T @ self.x


class CoshPotential(Potential):
    """1-D V(x) = cosh(x) - 1; strictly convex with superlinear gradient."""

    dim = 1

    def value(self, x):
        x = self._check(x)
        return float(np.cosh(x[0]) - 1.0)

    def gradient(self, x):
        x = self._check(x)
        return np.sinh(x)

    def hessian(self, x):
        x = self._check(x)
        return np.array([[np.cosh(x[0])]])

    def dual_gradient(self, y):
        y = self._check(y)
        return np.arcsinh(y)


class BoxBarrier(Potential):
    """Log barrier for the axis-aligned box prod_i [-a_i, a_i].

    V(x) = -sum_i log(a_i^2 - x_i^2); +inf outside the box (so that targets
    built on it vanish there, as Metropolis acceptance ratios require).
    """

    def __init__(self, half_widths):
        self.half_widths = np.atleast_1d(np.asarray(half_widths, dtype=float))
        if np.any(self.half_widths <= 0):
            raise ValueError("half widths must be positive")
        self.dim = self.half_widths.size

    def contains(self, x) -> bool:
        x = self._check(x)
        return bool(np.all(np.abs(x) < self.half_widths))

    def value(self, x):
        x = self._check(x)
        slack = self.half_widths**2 - x**2
        if np.any(slack <= 0.0):
            return math.inf
        return float(-np.log(slack).sum())

    def gradient(self, x):
        x = self._check(x)
        slack = self.half_widths**2 - x**2
        if np.any(slack <= 0.0):
            raise DomainError("gradient requested outside the open box")
        return 2.0 * x / slack

    def hessian(self, x):
        x = self._check(x)
        slack = self.half_widths**2 - x**2
        if np.any(slack <= 0.0):
            raise DomainError("Hessian requested outside the open box")
        return np.diag(2.0 * (self.half_widths**2 + x**2) / slack**2)

    def hessian_factor(self, x):
        return np.diag(np.sqrt(np.diag(self.hessian(x))))


class ScaledPotential(Potential):
    """scale * base; implements inverse-temperature targets exp(-beta * V)."""

    def __init__(self, base: Potential, scale: float):
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.base = base
        self.scale = float(scale)
        self.dim = base.dim

    def contains(self, x):
        return self.base.contains(np.asarray(x, dtype=float))

    def value(self, x):
        return self.scale * self.base.value(x)

    def gradient(self, x):
        return self.scale * self.base.gradient(x)

    def hessian(self, x):
        return self.scale * self.base.hessian(x)

    def hessian_factor(self, x):
        return math.sqrt(self.scale) * self.base.hessian_factor(x)

    def dual_gradient(self, y):
        return self.base.dual_gradient(np.asarray(y, dtype=float) / self.scale)
