"""Reproducible random streams for the samplers.

The generator identity is part of the reproducibility contract: a Philox
counter-based generator keyed by ``(seed, stream)``, with standard normals
produced by the Box-Muller transform applied to pairs of uniforms. Philox is
platform-independent and Box-Muller is spelled out here, so trajectories are
bitwise reproducible anywhere IEEE-754 doubles behave identically.
"""

import numpy as np

# Distinct stream ids so that chains and auxiliary draws (e.g. reference
# clouds) never share counters even under the same base seed.
CHAIN_STREAM = 0
REFERENCE_STREAM = 1 << 32
DATASET_STREAM = 2 << 32


class SamplerRng:
    """Philox-backed stream with Box-Muller normal draws.

    Parameters
    ----------
    seed : int
        Base experiment seed.
    stream : int
        Sub-stream identifier (replica index, possibly offset by one of the
        module-level stream constants).
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen = np.random.Generator(np.random.Philox(key=(self.seed, self.stream)))

    def uniform(self, size=None):
        """Uniform draws in [0, 1)."""
        return self._gen.random(size)

    def standard_normal(self, n: int) -> np.ndarray:
        """n i.i.d. standard normals via Box-Muller on ceil(n/2) uniform pairs."""
        m = (n + 1) // 2
        u1 = self._gen.random(m)
        u2 = self._gen.random(m)
        # Guard against log(0); random() is in [0, 1) so flip to (0, 1].
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return z[:n]

    def normal_matrix(self, rows: int, cols: int) -> np.ndarray:
        """Row-major matrix of standard normals (rows drawn consecutively)."""
        return self.standard_normal(rows * cols).reshape(rows, cols)


def replica_rng(seed: int, run_index: int) -> SamplerRng:
    """Stream for chain replica ``run_index`` under ``seed``."""
    return SamplerRng(seed, CHAIN_STREAM + run_index)


def reference_rng(seed: int, run_index: int) -> SamplerRng:
    """Independent stream for per-run reference draws (e.g. fresh uniforms)."""
    return SamplerRng(seed, REFERENCE_STREAM + run_index)


def dataset_rng(seed: int) -> SamplerRng:
    """Stream for synthetic dataset generation."""
    return SamplerRng(seed, DATASET_STREAM)
