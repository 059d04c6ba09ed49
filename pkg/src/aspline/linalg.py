"""Banded symmetric matrices, Cholesky solves and sparse design cross products.

Everything downstream of data ingestion works on these banded objects, so
the per-iteration cost of the fitting loop is independent of the sample
size. Bandwidths here are tiny (degree or degree + 1), which makes the
diagonal-major layout contiguous in the factorization inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import band_cholesky, band_solve
from .basis import DesignMatrix
from .errors import SingularMatrixError

__all__ = [
    "BandedSymMatrix",
    "CholeskyFactor",
    "xtx",
    "xtwx",
    "xty",
    "cholesky",
    "solve",
    "add_scaled",
    "add_diagonal",
]

#: Pivots at or below this fraction of the largest diagonal entry count as
#: singular. Appropriate for ungraded systems such as unpenalized normal
#: equations; penalized solves pass an explicit floor instead (see solver).
DEFAULT_PIVOT_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BandedSymMatrix:
    """Symmetric matrix stored by its main diagonal and ``bandwidth`` sub-diagonals.

    ``diagonals[d, i]`` is entry ``(i + d, i)``; only the lower band is kept.
    """

    dim: int
    bandwidth: int
    diagonals: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.diagonals, dtype=float))
        if d.shape != (self.bandwidth + 1, self.dim):
            raise ValueError(
                f"diagonals must have shape {(self.bandwidth + 1, self.dim)}, got {d.shape}"
            )
        object.__setattr__(self, "diagonals", d)

    @classmethod
    def from_dense(cls, a: np.ndarray, bandwidth: int) -> "BandedSymMatrix":
        a = np.asarray(a, dtype=float)
        p = a.shape[0]
        diags = np.zeros((bandwidth + 1, p))
        for d in range(bandwidth + 1):
            diags[d, : p - d] = np.diagonal(a, -d)
        return cls(p, bandwidth, diags)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for d in range(self.bandwidth + 1):
            idx = np.arange(self.dim - d)
            out[idx + d, idx] = self.diagonals[d, : self.dim - d]
            out[idx, idx + d] = self.diagonals[d, : self.dim - d]
        return out


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower banded factor L with A = L L^T, plus the factorization op count."""

    dim: int
    bandwidth: int
    diagonals: np.ndarray
    ops: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for d in range(self.bandwidth + 1):
            idx = np.arange(self.dim - d)
            out[idx + d, idx] = self.diagonals[d, : self.dim - d]
        return out


def xtwx(design: DesignMatrix, omega: np.ndarray) -> BandedSymMatrix:
    """Weighted cross product ``B^T diag(omega) B`` with bandwidth ``degree``.

    Each design row has ``degree + 1`` contiguous nonzeros, so the product
    has at most ``(dim)(degree + 1)`` distinct entries; they are accumulated
    per diagonal with bincount, never forming a dense intermediate.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (design.n_rows,):
        raise ValueError(f"omega must have length {design.n_rows}")
    if design.n_rows and (not np.all(np.isfinite(omega)) or np.any(omega < 0)):
        raise ValueError("omega entries must be finite and non-negative")
    q1 = design.degree + 1
    p = design.n_cols
    diags = np.zeros((design.degree + 1, p))
    if design.n_rows == 0:
        return BandedSymMatrix(p, design.degree, diags)
    vals = design.values
    for d in range(q1):
        for c in range(q1 - d):
            w = omega * vals[:, c + d] * vals[:, c]
            diags[d] += np.bincount(design.offsets + c, weights=w, minlength=p)
    return BandedSymMatrix(p, design.degree, diags)


def xtx(design: DesignMatrix) -> BandedSymMatrix:
    """Cross product ``B^T B``; unit-weight case of :func:`xtwx`."""
    return xtwx(design, np.ones(design.n_rows))


def xty(design: DesignMatrix, y: np.ndarray) -> np.ndarray:
    """Right-hand side ``B^T y`` accumulated over the sparse rows."""
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n_rows,):
        raise ValueError(f"y must have length {design.n_rows}")
    if design.n_rows == 0:
        return np.zeros(design.n_cols)
    q1 = design.degree + 1
    idx = (design.offsets[:, None] + np.arange(q1)).ravel()
    w = (design.values * y[:, None]).ravel()
    return np.bincount(idx, weights=w, minlength=design.n_cols)


def cholesky(a: BandedSymMatrix, pivot_rtol: float = DEFAULT_PIVOT_RTOL) -> CholeskyFactor:
    """Banded Cholesky factorization.

    Raises
    ------
    SingularMatrixError
        If a pivot is not finite or falls at or below
        ``pivot_rtol * max(diagonal)``, carrying the pivot index. With
        ``pivot_rtol=0`` only genuine breakdown (pivot <= 0) fails.
    """
    L, ops, fail = band_cholesky(a.diagonals, float(pivot_rtol))
    if fail >= 0:
        raise SingularMatrixError(fail)
    return CholeskyFactor(a.dim, a.bandwidth, L, int(ops))


def solve(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` given the banded factor of ``A``."""
    b = np.asarray(b, dtype=float)
    if b.shape != (factor.dim,):
        raise ValueError(f"right-hand side must have length {factor.dim}")
    return band_solve(factor.diagonals, b)


def add_scaled(a: BandedSymMatrix, b: BandedSymMatrix, beta: float = 1.0) -> BandedSymMatrix:
    """Banded sum ``a + beta * b``; result bandwidth is the wider of the two."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    m = max(a.bandwidth, b.bandwidth)
    diags = np.zeros((m + 1, a.dim))
    diags[: a.bandwidth + 1] = a.diagonals
    diags[: b.bandwidth + 1] += beta * b.diagonals
    return BandedSymMatrix(a.dim, m, diags)


def add_diagonal(a: BandedSymMatrix, amount: float) -> BandedSymMatrix:
    """Return ``a + amount * I``."""
    diags = a.diagonals.copy()
    diags[0] += amount
    return BandedSymMatrix(a.dim, a.bandwidth, diags)
