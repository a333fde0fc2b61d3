"""Pure-numpy fallback for the finite-volume inner loop.

Used when the compiled extension is unavailable; same contract as
``_fpcore.evolve_steps``.
"""

import numpy as np


def evolve_steps(m, p, c, nsteps):
    """Advance cell masses ``m`` in place by ``nsteps`` explicit Euler steps.

    Returns (max pre-renormalization mass drift, bad_step, bad_cell), with
    bad_step >= 0 when a cell mass turned nonpositive.
    """
    max_drift = 0.0
    for k in range(nsteps):
        lr = np.log(m / p)
        flux = 0.5 * (m[:-1] + m[1:]) * c * np.diff(lr)
        m[:-1] += flux
        m[1:] -= flux
        if np.any(m <= 0.0):
            return max_drift, k, int(np.argmax(m <= 0.0))
        total = m.sum()
        max_drift = max(max_drift, abs(total - 1.0))
        m /= total
    return max_drift, -1, -1
