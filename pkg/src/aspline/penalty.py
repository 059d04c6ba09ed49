"""Finite differences of coefficient vectors and the weighted ridge penalty.

The knot-selection penalty acts on order ``degree + 1`` differences of the
B-spline coefficients: one penalized difference per interior knot. The
penalty matrix ``D^T W D`` is assembled directly from the difference
stencil, so the rectangular difference matrix ``D`` itself is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .linalg import BandedSymMatrix

__all__ = ["DiffSpec", "diff", "penalty_matrix", "update_weights", "weighted_scores"]


@dataclass(frozen=True, eq=False)
class DiffSpec:
    """Difference operator of a given order acting on length-``p`` vectors.

    ``stencil`` holds the ``order + 1`` signed binomial coefficients
    ``(-1)^(order - i) * C(order, i)``; the represented matrix D has
    ``p - order`` rows, each carrying the stencil contiguously.
    """

    order: int
    p: int

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError("difference order must be a positive integer")
        if int(self.p) != self.p or self.p <= self.order:
            raise ValueError("vector length must exceed the difference order")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "p", int(self.p))

    @property
    def stencil(self) -> np.ndarray:
        d = self.order
        return np.array([(-1) ** (d - i) * comb(d, i) for i in range(d + 1)], dtype=float)

    @property
    def n_diffs(self) -> int:
        """Number of penalized differences, ``p - order``."""
        return self.p - self.order


def diff(a: np.ndarray, order: int) -> np.ndarray:
    """Repeated first differences; entry ``j`` is the stencil dotted with ``a[j:j+order+1]``."""
    a = np.asarray(a, dtype=float)
    if order < 1:
        raise ValueError("difference order must be >= 1")
    if order >= a.size:
        raise ValueError("difference order must be smaller than the vector length")
    return np.diff(a, n=order)


def penalty_matrix(spec: DiffSpec, w: np.ndarray) -> BandedSymMatrix:
    """Assemble ``D^T diag(w) D`` as a banded matrix of bandwidth ``spec.order``.

    Entry ``(r, c)`` sums ``w[j] * stencil[r - j] * stencil[c - j]`` over the
    rows ``j`` of D whose stencil covers both columns; the loop below runs
    over stencil index pairs, each contributing a shifted copy of ``w`` to
    one diagonal.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (spec.n_diffs,):
        raise ValueError(f"weight vector must have length {spec.n_diffs}")
    if w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0)):
        raise ValueError("weights must be finite and strictly positive")
    d = spec.order
    s = spec.stencil
    m = spec.n_diffs
    diags = np.zeros((d + 1, spec.p))
    for dd in range(d + 1):
        for u in range(d + 1 - dd):
            diags[dd, u : u + m] += (s[u] * s[u + dd]) * w
    return BandedSymMatrix(spec.p, d, diags)


def update_weights(a: np.ndarray, spec: DiffSpec, epsilon: float = 1e-5) -> np.ndarray:
    """Reweighting step ``w_j = 1 / ((D a)_j^2 + epsilon^2)``.

    Small ``epsilon`` makes the weighted squared difference approximate a
    count of nonzero differences; weights stay finite and positive for any
    coefficient vector.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = diff(np.asarray(a, dtype=float), spec.order)
    return 1.0 / (d * d + epsilon * epsilon)


def weighted_scores(a: np.ndarray, spec: DiffSpec, epsilon: float = 1e-5) -> np.ndarray:
    """Per-difference relevance scores ``w_j (D a)_j^2``, each in ``[0, 1)``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    d = diff(np.asarray(a, dtype=float), spec.order)
    d2 = d * d
    return d2 / (d2 + epsilon * epsilon)
