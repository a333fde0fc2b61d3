"""Mirror maps of Legendre type: gradient, Hessian, factor, and dual gradient."""

import numpy as np

from mirrorlangevin import conjugate
from mirrorlangevin.potentials import BoxBarrier, Potential, nudge_off_origin


class MirrorMap:
    """Strictly convex C^2 function phi with an invertible gradient."""

    dim: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess_factor(self, x: np.ndarray) -> np.ndarray:
        from mirrorlangevin.geometry import spd_factor

        return spd_factor(self.hess(x))

    def contains(self, x: np.ndarray) -> bool:
        return True

    def dual_grad(self, y, warm_start=None, settings=None) -> np.ndarray:
        """x with grad(x) = y; closed form where available, Newton otherwise."""
        raise NotImplementedError


class QuadraticMirror(MirrorMap):
    """phi(x) = ||x||^2 / 2; the identity mirror (plain Langevin geometry)."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ x)

    def grad(self, x):
        return np.asarray(x, dtype=float).copy()

    def hess(self, x):
        return np.eye(self.dim)

    def hess_factor(self, x):
        return np.eye(self.dim)

    def dual_grad(self, y, warm_start=None, settings=None):
        return np.asarray(y, dtype=float).copy()


class PotentialMirror(MirrorMap):
    """phi = V for a strictly convex potential (the Newton geometry)."""

    def __init__(self, pot: Potential):
        self.pot = pot
        self.dim = pot.dim

    def value(self, x):
        return self.pot.value(x)

    def grad(self, x):
        return self.pot.gradient(x)

    def hess(self, x):
        return self.pot.hessian(x)

    def hess_factor(self, x):
        return self.pot.hessian_factor(x)

    def contains(self, x):
        return self.pot.contains(np.asarray(x, dtype=float))

    def dual_grad(self, y, warm_start=None, settings=None):
        y = np.asarray(y, dtype=float)
        try:
            return self.pot.dual_gradient(y)
        except NotImplementedError:
            if warm_start is None:
                raise ValueError("iterative gradient inversion needs a warm start")
            return conjugate.invert_gradient(self, y, warm_start, settings)


class PowerNormMirror(MirrorMap):
    """phi(x) = ||x||^p with p > 1 (presets use p = 3/2)."""

    def __init__(self, dim: int, p: float = 1.5):
        if not p > 1.0:
            raise ValueError(f"need p > 1 for strict convexity, got {p}")
        self.dim = int(dim)
        self.p = float(p)

    def value(self, x):
        return float(np.linalg.norm(x) ** self.p)

    def grad(self, x):
        x = nudge_off_origin(np.asarray(x, dtype=float))
        r = np.linalg.norm(x)
        return self.p * r ** (self.p - 2.0) * x

    def hess(self, x):
        x = nudge_off_origin(np.asarray(x, dtype=float))
        r = np.linalg.norm(x)
        u = x / r
        return self.p * r ** (self.p - 2.0) * (
            np.eye(self.dim) + (self.p - 2.0) * np.outer(u, u)
        )

    def dual_grad(self, y, warm_start=None, settings=None):
        # ||grad(x)|| = p r^(p-1) determines the radius, direction is shared.
        y = np.asarray(y, dtype=float)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return np.zeros(self.dim)
        r = (ny / self.p) ** (1.0 / (self.p - 1.0))
        return (r / ny) * y


class BarrierMirror(MirrorMap):
    """Mirror map given by a box log-barrier; dual gradient is always iterative."""

    def __init__(self, pot: BoxBarrier):
        if not isinstance(pot, BoxBarrier):
            raise TypeError("BarrierMirror wraps a BoxBarrier potential")
        self.pot = pot
        self.dim = pot.dim

    def value(self, x):
        return self.pot.value(x)

    def grad(self, x):
        return self.pot.gradient(x)

    def hess(self, x):
        return self.pot.hessian(x)

    def hess_factor(self, x):
        return self.pot.hessian_factor(x)

    def contains(self, x):
        return self.pot.contains(np.asarray(x, dtype=float))

    def dual_grad(self, y, warm_start=None, settings=None):
        if warm_start is None:
            raise ValueError("BarrierMirror gradient inversion needs a warm start")
        return conjugate.invert_gradient(self, np.asarray(y, dtype=float), warm_start, settings)
