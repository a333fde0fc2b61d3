"""Numerical inversion of a mirror gradient by damped Newton iteration.

Solves grad_phi(x) = y, i.e. evaluates the conjugate's gradient at y, with a
warm start. Backtracking keeps iterates inside the domain of phi and enforces
a monotone residual norm.
"""

from dataclasses import dataclass

import numpy as np

from mirrorlangevin import geometry


class ConvergenceError(RuntimeError):
    """Newton iteration exhausted maxIterations."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepFailureError(RuntimeError):
    """Backtracking could not find an admissible step above the minimum size."""


@dataclass(frozen=True)
class InvertSettings:
    # Residual threshold is tolerance * (1 + |y|): barrier gradients grow
    # without bound near the boundary, so a purely absolute test would stall
    # at floating-point resolution there.
    tolerance: float = 1e-10
    max_iterations: int = 50
    backtracking_factor: float = 0.5
    min_step: float = 1e-12

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if not 0.0 < self.backtracking_factor < 1.0:
            raise ValueError("backtracking factor must lie in (0, 1)")


DEFAULT_SETTINGS = InvertSettings()


def invert_gradient(mirror, y, warm_start, settings: InvertSettings | None = None):
    """Return x with ||grad_phi(x) - y|| <= tolerance * (1 + ||y||).

    Newton direction -[hess_phi(x)]^{-1} (grad_phi(x) - y), step length chosen
    by backtracking so x stays in the domain and the residual does not grow.
    """
    x, _ = invert_gradient_with_stats(mirror, y, warm_start, settings)
    return x


def invert_gradient_with_stats(mirror, y, warm_start, settings: InvertSettings | None = None):
    """Like :func:`invert_gradient` but also returns the Newton iteration count."""
    st = DEFAULT_SETTINGS if settings is None else settings
    y = np.asarray(y, dtype=float)
    x = np.asarray(warm_start, dtype=float).copy()
    if not mirror.contains(x):
        raise ValueError("warm start lies outside the domain of the mirror map")

    threshold = st.tolerance * (1.0 + np.linalg.norm(y))
    res = mirror.grad(x) - y
    res_norm = np.linalg.norm(res)
    for it in range(1, st.max_iterations + 1):
        if res_norm <= threshold:
            return x, it - 1
        delta = -geometry.spd_solve(mirror.hess(x), res)
        # Step below the float resolution of x: the residual is as small as
        # the primal variable can represent (steep barrier gradients), done.
        if np.linalg.norm(delta) <= 1e-15 * (1.0 + np.linalg.norm(x)):
            return x, it
        t = 1.0
        while True:
            cand = x + t * delta
            if mirror.contains(cand):
                cand_res = mirror.grad(cand) - y
                cand_norm = np.linalg.norm(cand_res)
                if cand_norm <= res_norm:
                    break
            t *= st.backtracking_factor
            if t < st.min_step:
                raise StepFailureError(
                    f"backtracking stalled below {st.min_step:g} with residual {res_norm:.3e}"
                )
        x, res, res_norm = cand, cand_res, cand_norm

    if res_norm <= threshold:
        return x, st.max_iterations
    raise ConvergenceError(
        f"gradient inversion did not reach {st.tolerance:g} in "
        f"{st.max_iterations} iterations (last residual {res_norm:.3e})",
        residual=res_norm,
        iterations=st.max_iterations,
    )
