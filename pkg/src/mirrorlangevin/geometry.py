"""Small dense SPD linear algebra and finite-difference oracles.

Everything here is a pure function of its inputs. Matrices are plain numpy
arrays; "SPD" is detected by Cholesky success rather than an eigensolve.
"""

import numpy as np

SYMMETRY_RTOL = 1e-12
# A pivot this small relative to the largest diagonal entry counts as a
# factorization failure.
PIVOT_RTOL = 1e-14


class FactorizationError(ValueError):
    """Cholesky failed: the input is not (numerically) positive definite."""


class SolveError(ValueError):
    """SPD solve failed on a singular or indefinite matrix."""


class OracleError(ValueError):
    """A finite-difference stencil hit a non-finite function value."""


def check_spd_input(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(a))
    if scale > 0 and np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric to within 1e-12 relative tolerance")
    return a


def spd_factor(a: np.ndarray) -> np.ndarray:
    """Lower-triangular M with M @ M.T == a (Cholesky).

    Only the product M M^T matters to callers (it fixes the covariance of
    injected noise), so the Cholesky factor is used instead of the symmetric
    square root.
    """
    a = check_spd_input(a)
    d = a.shape[0]
    m = np.zeros_like(a)
    for j in range(d):
        s = a[j, j] - m[j, :j] @ m[j, :j]
        # The floor is relative to the row's own diagonal so that extreme
        # but benign scale differences between rows (diagonal barrier
        # Hessians near a boundary) do not trip the guard.
        if not s > PIVOT_RTOL * max(a[j, j], 0.0):
            raise FactorizationError(
                f"non-positive pivot {s:.3e} at index {j}: matrix is not positive definite"
            )
        m[j, j] = np.sqrt(s)
        if j + 1 < d:
            m[j + 1 :, j] = (a[j + 1 :, j] - m[j + 1 :, :j] @ m[j, :j]) / m[j, j]
    return m


def spd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b for SPD ``a`` via its Cholesky factor."""
    b = np.asarray(b, dtype=float)
    try:
        m = spd_factor(a)
    except FactorizationError as exc:
        raise SolveError(f"cannot solve with a non-SPD matrix: {exc}") from exc
    if b.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {m.shape[0]}, rhs {b.shape[0]}")
    from scipy.linalg import solve_triangular

    y = solve_triangular(m, b, lower=True)
    return solve_triangular(m.T, y, lower=False)


def default_gradient_step(x: np.ndarray) -> float:
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def default_hessian_step(x: np.ndarray) -> float:
    return 1e-4 * (1.0 + float(np.linalg.norm(x)))


def finite_diff_gradient(f, x: np.ndarray, step: float | None = None) -> np.ndarray:
    """Central-difference gradient, componentwise."""
    x = np.asarray(x, dtype=float)
    s = default_gradient_step(x) if step is None else float(step)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = s
        fp, fm = f(x + e), f(x - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OracleError(f"non-finite value in gradient stencil, component {i}")
        g[i] = (fp - fm) / (2.0 * s)
    return g


def finite_diff_hessian(f, x: np.ndarray, step: float | None = None) -> np.ndarray:
    """Second-difference Hessian stencil, symmetrized."""
    x = np.asarray(x, dtype=float)
    s = default_hessian_step(x) if step is None else float(step)
    d = x.size
    h = np.empty((d, d))
    f0 = f(x)
    if not np.isfinite(f0):
        raise OracleError("non-finite value at the stencil center")
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = s
        fpp, fmm = f(x + ei), f(x - ei)
        if not (np.isfinite(fpp) and np.isfinite(fmm)):
            raise OracleError(f"non-finite value in Hessian stencil, diagonal {i}")
        h[i, i] = (fpp - 2.0 * f0 + fmm) / s**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = s
            vals = [f(x + ei + ej), f(x - ei - ej), f(x + ei - ej), f(x - ei + ej)]
            if not np.all(np.isfinite(vals)):
                raise OracleError(f"non-finite value in Hessian stencil, pair ({i},{j})")
            h[i, j] = h[j, i] = (vals[0] + vals[1] - vals[2] - vals[3]) / (4.0 * s**2)
    return 0.5 * (h + h.T)
