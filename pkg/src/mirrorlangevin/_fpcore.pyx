# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the 1-D finite-volume density evolution.

Semantics must match _fpfallback.evolve_steps exactly; the test suite runs
both when the extension is available.
"""

from libc.math cimport log, fabs

import numpy as np


def evolve_steps(double[::1] m, double[::1] p, double[::1] c, int nsteps):
    """Advance cell masses ``m`` in place by ``nsteps`` explicit Euler steps.

    m: cell masses (modified in place), p: target cell masses, c: dt / dx^2
    times the inverse mirror curvature at each interior interface (length
    n - 1). Returns (max pre-renormalization mass drift, bad_step, bad_cell);
    bad_step >= 0 flags the first negative mass, at which point m holds the
    offending state.
    """
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t i, k
    cdef double drift, max_drift = 0.0, total
    cdef double[::1] flux = np.empty(n - 1, dtype=np.float64)
    cdef double[::1] lr = np.empty(n, dtype=np.float64)

    for k in range(nsteps):
        for i in range(n):
            lr[i] = log(m[i] / p[i])
        for i in range(n - 1):
            flux[i] = 0.5 * (m[i] + m[i + 1]) * c[i] * (lr[i + 1] - lr[i])
        total = 0.0
        for i in range(n):
            if i > 0:
                m[i] -= flux[i - 1]
            if i < n - 1:
                m[i] += flux[i]
            if m[i] <= 0.0:
                return max_drift, k, i
            total += m[i]
        drift = fabs(total - 1.0)
        if drift > max_drift:
            max_drift = drift
        for i in range(n):
            m[i] /= total
    return max_drift, -1, -1
