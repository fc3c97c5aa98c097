"""Hot loops for grid-based objective evaluation.

The solvers repeatedly reduce an (N, n) matrix of piece dot-products
against per-node masses.  A fused single pass over the matrix is
several times faster than chained numpy ufuncs at the grid sizes used
for three-dimensional quadrature, so the kernels are compiled with
numba when available; the numpy fallbacks compute identical quantities.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@njit(cache=True, nogil=True)
def _expected_clipped_max_jit(P, masses, offsets, alpha):
    n, npieces = P.shape
    acc = 0.0
    for i in range(n):
        m = P[i, 0] + offsets[0]
        for j in range(1, npieces):
            v = P[i, j] + offsets[j]
            if v > m:
                m = v
        m -= alpha
        if m > 0.0:
            acc += masses[i] * m
    return acc


@njit(cache=True, nogil=True)
def _expected_max_jit(P, masses, offsets):
    n, npieces = P.shape
    acc = 0.0
    for i in range(n):
        m = P[i, 0] + offsets[0]
        for j in range(1, npieces):
            v = P[i, j] + offsets[j]
            if v > m:
                m = v
        acc += masses[i] * m
    return acc


def _expected_clipped_max_np(P, masses, offsets, alpha):
    vals = (P + offsets).max(axis=1)
    np.subtract(vals, alpha, out=vals)
    np.clip(vals, 0.0, None, out=vals)
    return float(vals @ masses)


def _expected_max_np(P, masses, offsets):
    return float((P + offsets).max(axis=1) @ masses)


if _HAVE_NUMBA:
    expected_clipped_max = _expected_clipped_max_jit
    expected_max = _expected_max_jit
else:  # pragma: no cover
    expected_clipped_max = _expected_clipped_max_np
    expected_max = _expected_max_np
