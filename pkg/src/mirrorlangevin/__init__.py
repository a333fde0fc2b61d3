"""Mirror-Langevin and Newton-Langevin sampling with convergence diagnostics.

Subpackages are organized around the main moving parts: analytic target
potentials, mirror maps, chain drivers, a deterministic 1-D Fokker-Planck
solver, and sample/grid-based diagnostics. The ``harness`` module ties them
together behind named experiment presets and a CSV output contract.
"""

from mirrorlangevin import (
    conjugate,
    diagnostics,
    fokker_planck,
    geometry,
    mirrors,
    potentials,
    samplers,
)

__version__ = "0.1.0"

__all__ = [
    "conjugate",
    "diagnostics",
    "fokker_planck",
    "geometry",
    "mirrors",
    "potentials",
    "samplers",
    "__version__",
]
