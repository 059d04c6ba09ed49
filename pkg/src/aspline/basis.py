"""B-spline knot sequences, basis evaluation and sparse design matrices.

The basis is clamped: both domain endpoints appear with multiplicity
``degree + 1`` in the full knot sequence, so a basis over ``k`` interior
knots has dimension ``degree + k + 1`` and the fit interpolates nothing
outside ``[domain_lo, domain_hi]``. Intervals are half-open except at the
right domain edge, which belongs to the last interval; every point of the
closed domain is therefore representable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KnotVector",
    "DesignMatrix",
    "make_knots",
    "eval_basis",
    "build_design",
    "spline_values",
]


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Degree plus interior knots of a clamped B-spline basis.

    Parameters
    ----------
    domain_lo, domain_hi : float
        Closed interval carrying the basis. Must satisfy ``domain_lo < domain_hi``.
    interior : numpy.ndarray
        Strictly increasing knots strictly inside the open domain.
    degree : int
        Polynomial degree of each piece, ``>= 0``.
    """

    domain_lo: float
    domain_hi: float
    interior: np.ndarray
    degree: int

    def __post_init__(self):
        interior = np.atleast_1d(np.asarray(self.interior, dtype=float))
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "domain_lo", float(self.domain_lo))
        object.__setattr__(self, "domain_hi", float(self.domain_hi))
        if not (np.isfinite(self.domain_lo) and np.isfinite(self.domain_hi)):
            raise ValueError("domain bounds must be finite")
        if not self.domain_lo < self.domain_hi:
            raise ValueError("domain_lo must be strictly smaller than domain_hi")
        if int(self.degree) != self.degree or self.degree < 0:
            raise ValueError("degree must be a non-negative integer")
        object.__setattr__(self, "degree", int(self.degree))
        if interior.size:
            if not np.all(np.isfinite(interior)):
                raise ValueError("interior knots must be finite")
            if np.any(np.diff(interior) <= 0):
                raise ValueError("interior knots must be strictly increasing")
            if interior[0] <= self.domain_lo or interior[-1] >= self.domain_hi:
                raise ValueError("interior knots must lie strictly inside the domain")

    @property
    def n_interior(self) -> int:
        return int(self.interior.size)

    @property
    def dim(self) -> int:
        """Dimension of the spline space, ``degree + n_interior + 1``."""
        return self.degree + self.n_interior + 1

    def full_knots(self) -> np.ndarray:
        """Boundary-augmented knot sequence of length ``n_interior + 2*(degree+1)``."""
        q1 = self.degree + 1
        return np.concatenate(
            [np.full(q1, self.domain_lo), self.interior, np.full(q1, self.domain_hi)]
        )


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Row-sparse B-spline design matrix.

    Row ``i`` has ``degree + 1`` contiguous entries ``values[i]`` starting at
    column ``offsets[i]``; everything else in the row is zero.
    """

    n_rows: int
    n_cols: int
    degree: int
    offsets: np.ndarray
    values: np.ndarray

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        if self.n_rows:
            cols = self.offsets[:, None] + np.arange(self.degree + 1)
            out[np.arange(self.n_rows)[:, None], cols] = self.values
        return out

    def dot(self, coef: np.ndarray) -> np.ndarray:
        """Matrix-vector product using only the stored nonzeros."""
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.n_cols,):
            raise ValueError(f"coefficient vector must have length {self.n_cols}")
        if self.n_rows == 0:
            return np.zeros(0)
        cols = self.offsets[:, None] + np.arange(self.degree + 1)
        return np.einsum("ij,ij->i", self.values, coef[cols])


def make_knots(domain_lo: float, domain_hi: float, k: int, degree: int) -> KnotVector:
    """Equally spaced interior knots: ``t_j = lo + j*(hi-lo)/(k+1)``, ``j = 1..k``."""
    if not (np.isfinite(domain_lo) and np.isfinite(domain_hi)):
        raise ValueError("domain bounds must be finite")
    if int(k) != k or k < 0:
        raise ValueError("number of interior knots must be a non-negative integer")
    interior = np.linspace(domain_lo, domain_hi, int(k) + 2)[1:-1]
    return KnotVector(domain_lo, domain_hi, interior, degree)


def _basis_rows(kv: KnotVector, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis values for each evaluation point.

    Returns ``(offsets, values)`` where ``values[i, j]`` is basis function
    ``offsets[i] + j`` evaluated at ``xs[i]``. Uses the Cox-de Boor recursion
    restricted to the ``degree + 1`` functions that are nonzero on the knot
    interval containing the point; the interval spans are all positive for a
    valid knot vector, so no degenerate denominators arise.
    """
    q = kv.degree
    t = kv.full_knots()
    xs = np.asarray(xs, dtype=float)
    with np.errstate(invalid="ignore"):
        bad = ~((xs >= kv.domain_lo) & (xs <= kv.domain_hi))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"x value {xs[i]!r} (position {i}) outside the basis domain "
            f"[{kv.domain_lo:g}, {kv.domain_hi:g}]"
        )
    # Interval index l with t[l] <= x < t[l+1]; the right domain edge maps
    # to the last interval.
    left_idx = np.searchsorted(t, xs, side="right") - 1
    np.clip(left_idx, q, q + kv.n_interior, out=left_idx)

    n = xs.size
    vals = np.zeros((n, q + 1))
    vals[:, 0] = 1.0
    for j in range(1, q + 1):
        saved = np.zeros(n)
        for r in range(j):
            denom = t[left_idx + r + 1] - t[left_idx + r + 1 - j]
            temp = vals[:, r] / denom
            vals[:, r] = saved + (t[left_idx + r + 1] - xs) * temp
            saved = (xs - t[left_idx + r + 1 - j]) * temp
        vals[:, j] = saved
    return left_idx - q, vals


def eval_basis(kv: KnotVector, x: float) -> np.ndarray:
    """Evaluate all ``kv.dim`` basis functions at a single point in the domain."""
    offsets, vals = _basis_rows(kv, np.atleast_1d(float(x)))
    out = np.zeros(kv.dim)
    out[offsets[0] : offsets[0] + kv.degree + 1] = vals[0]
    return out


def build_design(kv: KnotVector, xs) -> DesignMatrix:
    """Sparse design matrix with row ``i`` equal to ``eval_basis(kv, xs[i])``."""
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size == 0:
        return DesignMatrix(
            0, kv.dim, kv.degree, np.zeros(0, dtype=np.int64), np.zeros((0, kv.degree + 1))
        )
    offsets, vals = _basis_rows(kv, xs)
    return DesignMatrix(xs.size, kv.dim, kv.degree, offsets.astype(np.int64), vals)


def spline_values(kv: KnotVector, coef: np.ndarray, xs) -> np.ndarray:
    """Evaluate the spline with the given coefficients at points of the domain."""
    return build_design(kv, xs).dot(coef)
