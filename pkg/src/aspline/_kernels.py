"""Compiled inner loops for banded Cholesky factorization and substitution.

Band storage is diagonal-major: ``diags[d, i]`` holds entry ``(i + d, i)`` of
a symmetric matrix, for ``0 <= d <= bandwidth`` and ``0 <= i < dim - d``.
Entries beyond each diagonal's length are padding and must be zero.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def band_cholesky(diags, rel_floor):
    """Factor A = L L^T for a banded symmetric matrix stored by diagonals.

    Returns ``(L, ops, fail)`` where ``L`` uses the same diagonal-major
    layout, ``ops`` counts inner-loop multiply-accumulates, and ``fail`` is
    the index of the first pivot at or below ``rel_floor * max(diag)``
    (or not finite), -1 on success.
    """
    m1, p = diags.shape
    m = m1 - 1
    L = np.zeros((m1, p))
    maxdiag = 0.0
    for j in range(p):
        if diags[0, j] > maxdiag:
            maxdiag = diags[0, j]
    floor = rel_floor * maxdiag
    ops = 0
    for j in range(p):
        s = diags[0, j]
        tmax = min(j, m)
        for t in range(1, tmax + 1):
            s -= L[t, j - t] * L[t, j - t]
            ops += 1
        if not np.isfinite(s) or not (s > floor):
            return L, ops, j
        ljj = np.sqrt(s)
        L[0, j] = ljj
        dmax = min(m, p - 1 - j)
        for d in range(1, dmax + 1):
            s2 = diags[d, j]
            tmax2 = min(j, m - d)
            for t in range(1, tmax2 + 1):
                s2 -= L[d + t, j - t] * L[t, j - t]
                ops += 1
            L[d, j] = s2 / ljj
            ops += 1
        ops += 1
    return L, ops, -1


@njit(cache=True)
def penalized_system(btb_diags, stencil, w, lam):
    """Assemble ``B^T B + lam * D^T diag(w) D`` by diagonals in one pass.

    ``btb_diags`` carries the design cross product (bandwidth = its row
    count minus one, at most the difference order); the result has the
    difference operator's bandwidth ``len(stencil) - 1``.
    """
    d = stencil.size - 1
    q_band = btb_diags.shape[0] - 1
    p = btb_diags.shape[1]
    out = np.zeros((d + 1, p))
    for dd in range(q_band + 1):
        for j in range(p - dd):
            out[dd, j] = btb_diags[dd, j]
    m = p - d
    for dd in range(d + 1):
        for u in range(d + 1 - dd):
            c = lam * stencil[u] * stencil[u + dd]
            for j in range(m):
                out[dd, u + j] += c * w[j]
    return out


@njit(cache=True)
def band_solve(L, b):
    """Solve L L^T x = b by forward then backward substitution."""
    m1, p = L.shape
    m = m1 - 1
    x = b.copy()
    for i in range(p):
        s = x[i]
        tmax = min(i, m)
        for t in range(1, tmax + 1):
            s -= L[t, i - t] * x[i - t]
        x[i] = s / L[0, i]
    for i in range(p - 1, -1, -1):
        s = x[i]
        dmax = min(m, p - 1 - i)
        for d in range(1, dmax + 1):
            s -= L[d, i] * x[i + d]
        x[i] = s / L[0, i]
    return x
