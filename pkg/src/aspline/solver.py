"""Adaptive ridge iteration for knot selection, single penalty and penalty path.

For a fixed penalty ``lam`` the solver alternates an explicit weighted ridge
minimization

    a = (B^T B + lam * D^T W D)^{-1} B^T y

with the reweighting ``w_j = 1/((D a)_j^2 + eps^2)`` until the coefficients
and the set of active differences stabilize. A difference whose weighted
score reaches the selection threshold marks its interior knot as kept.

Across a penalty grid the converged coefficients of one penalty warm-start
the next. Graded grids run ascending (small to large penalty) by default:
starting from the dense end makes the path sweep the full model sequence
from all knots down to none, which a descending path does not revisit once
differences have been crushed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._kernels import band_cholesky, band_solve, penalized_system
from .basis import DesignMatrix, KnotVector
from .errors import SingularMatrixError
from .linalg import (
    BandedSymMatrix,
    add_diagonal,
    add_scaled,
    cholesky,
    solve,
    xtx,
    xty,
)
from .penalty import DiffSpec, penalty_matrix, update_weights, weighted_scores

__all__ = [
    "ARConfig",
    "ARState",
    "DesignProducts",
    "PathEntry",
    "LambdaPath",
    "default_lambda_grid",
    "wpss_minimize",
    "adaptive_ridge",
    "run_path",
    "pspline_coefficients",
]

logger = logging.getLogger(__name__)

#: Diagonal jitter added (once) when a penalized system breaks down, as a
#: fraction of the largest diagonal entry.
JITTER_FRACTION = 1e-10


@dataclass(frozen=True)
class ARConfig:
    """Tuning constants of the adaptive ridge iteration.

    ``tol`` applies to the relative sup-norm change of the coefficients;
    convergence additionally requires the selection vector to repeat between
    consecutive iterations.
    """

    epsilon: float = 1e-5
    sel_threshold: float = 0.99
    tol: float = 1e-8
    max_iter: int = 1000

    def __post_init__(self):
        if not (self.epsilon > 0 and self.tol > 0 and self.max_iter > 0):
            raise ValueError("epsilon, tol and max_iter must be positive")
        if not 0 < self.sel_threshold < 1:
            raise ValueError("sel_threshold must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class DesignProducts:
    """Design matrix with its precomputed cross products.

    ``btb`` and ``bty`` are formed once per dataset; afterwards the fitting
    loop never touches the individual observations again.
    """

    design: DesignMatrix
    btb: BandedSymMatrix
    bty: np.ndarray

    @classmethod
    def from_data(cls, design: DesignMatrix, y: np.ndarray) -> "DesignProducts":
        return cls(design, xtx(design), xty(design, y))

    @property
    def dim(self) -> int:
        return self.design.n_cols


@dataclass(frozen=True, eq=False)
class ARState:
    """Converged (or iteration-capped) state of the adaptive ridge at one penalty."""

    coef: np.ndarray
    weights: np.ndarray
    lam: float
    scores: np.ndarray
    sel: np.ndarray
    n_iter: int
    converged: bool


@dataclass(eq=False)
class PathEntry:
    """One penalty of a path run; refit and criteria are attached later."""

    lam: float
    state: ARState
    fit: object | None = None
    error: str | None = None


@dataclass(eq=False)
class LambdaPath:
    entries: list[PathEntry] = field(default_factory=list)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])


def default_lambda_grid(lo: float = 1e-4, hi: float = 1e6, num: int = 100) -> np.ndarray:
    """Ascending logarithmic penalty grid."""
    if not (lo > 0 and hi > lo and num >= 1):
        raise ValueError("need 0 < lo < hi and num >= 1")
    if num == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, num)


def _factor_penalized(system: BandedSymMatrix):
    """Factor a penalized normal-equations matrix.

    Breakdown detection only (pivot <= 0): with crushed weights the diagonal
    is penalty-dominated and small pivots in the unpenalized directions are
    legitimate, so a relative pivot floor would reject healthy systems. On
    breakdown a single diagonal jitter retry is attempted before giving up.
    """
    try:
        return cholesky(system, pivot_rtol=0.0)
    except SingularMatrixError as first:
        jitter = JITTER_FRACTION * float(np.max(system.diagonals[0]))
        if jitter <= 0:
            raise
        logger.debug(
            "penalized system broke down at pivot %d; retrying with jitter %.3e",
            first.pivot_index,
            jitter,
        )
        return cholesky(add_diagonal(system, jitter), pivot_rtol=0.0)


def _solve_reweighted(
    products: DesignProducts, stencil: np.ndarray, w: np.ndarray, lam: float
) -> np.ndarray:
    """Hot-loop equivalent of ``wpss_minimize(products, penalty_matrix(spec, w), lam)``.

    Fuses the penalty assembly into one compiled pass; the same breakdown
    and jitter policy applies.
    """
    system = penalized_system(products.btb.diagonals, stencil, w, lam)
    L, _, fail = band_cholesky(system, 0.0)
    if fail >= 0:
        jitter = JITTER_FRACTION * float(np.max(system[0]))
        if jitter <= 0:
            raise SingularMatrixError(fail)
        logger.debug("penalized system broke down at pivot %d; jitter retry", fail)
        system[0] += jitter
        L, _, fail = band_cholesky(system, 0.0)
        if fail >= 0:
            raise SingularMatrixError(fail)
    return band_solve(L, products.bty)


def wpss_minimize(products: DesignProducts, pen: BandedSymMatrix | None, lam: float) -> np.ndarray:
    """Exact minimizer of the weighted penalized sum of squares for fixed weights.

    Solves ``(B^T B + lam * pen) a = B^T y`` through the banded Cholesky
    factorization. ``pen`` may be None (or ``lam`` zero) for the unpenalized
    normal equations.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if pen is None or lam == 0.0:
        system = products.btb
    else:
        system = add_scaled(products.btb, pen, lam)
    return solve(_factor_penalized(system), products.bty)


def adaptive_ridge(
    products: DesignProducts,
    kv: KnotVector,
    lam: float,
    cfg: ARConfig | None = None,
    init: np.ndarray | None = None,
) -> ARState:
    """Run the reweighted ridge iteration at a single penalty.

    Starts from zero coefficients and unit weights, or from ``init`` (with
    weights recomputed from it) when warm-starting. Convergence requires the
    relative sup-norm coefficient change to drop to ``cfg.tol`` with the
    selection vector unchanged between consecutive iterations; otherwise the
    state is returned after ``cfg.max_iter`` iterations with
    ``converged=False``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    cfg = cfg or ARConfig()
    p = kv.dim
    k = kv.n_interior
    if k == 0:
        # No selectable knots: the penalty is empty and the fit is plain
        # least squares on the polynomial space.
        coef = wpss_minimize(products, None, 0.0)
        empty = np.zeros(0)
        return ARState(coef, empty, lam, empty, np.zeros(0, dtype=bool), 1, True)

    spec = DiffSpec(kv.degree + 1, p)
    stencil = spec.stencil
    eps2 = cfg.epsilon * cfg.epsilon
    if init is None:
        a = np.zeros(p)
        w = np.ones(k)
    else:
        a = np.asarray(init, dtype=float)
        if a.shape != (p,):
            raise ValueError(f"init must have length {p}")
        w = update_weights(a, spec, cfg.epsilon)
    sel_prev = None
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        a_new = _solve_reweighted(products, stencil, w, lam)
        d = np.diff(a_new, n=spec.order)
        d2 = d * d
        w = 1.0 / (d2 + eps2)
        scores = d2 * w
        sel = scores >= cfg.sel_threshold
        delta = np.max(np.abs(a_new - a)) / (1.0 + np.max(np.abs(a)))
        stable = sel_prev is not None and np.array_equal(sel, sel_prev)
        a, sel_prev = a_new, sel
        if delta <= cfg.tol and stable:
            converged = True
            break
    if not converged:
        logger.debug("adaptive ridge at lam=%.3e stopped at max_iter=%d", lam, cfg.max_iter)
    return ARState(a, w, float(lam), scores, sel, n_iter, converged)


def run_path(
    products: DesignProducts,
    kv: KnotVector,
    lambdas: np.ndarray,
    cfg: ARConfig | None = None,
) -> LambdaPath:
    """Solve a strictly monotone penalty grid with warm starts.

    Each penalty is initialized from the previous penalty's converged
    coefficients; the first is cold-started. Entries keep the grid order.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a non-empty vector")
    if np.any(lambdas <= 0):
        raise ValueError("all penalties must be positive")
    if lambdas.size > 1:
        d = np.diff(lambdas)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("lambdas must be strictly monotone")
    path = LambdaPath()
    coef = None
    for lam in lambdas:
        state = adaptive_ridge(products, kv, lam, cfg, init=coef)
        coef = state.coef
        path.entries.append(PathEntry(float(lam), state))
    _audit_dimension_monotonicity(path)
    return path


def _audit_dimension_monotonicity(path: LambdaPath) -> int:
    """Log (not assert) penalties where the selected count increases with lam."""
    by_lam = sorted(path.entries, key=lambda e: e.lam)
    dims = [int(np.sum(e.state.sel)) for e in by_lam]
    violations = sum(1 for i in range(len(dims) - 1) if dims[i + 1] > dims[i])
    if violations:
        logger.info(
            "selected-knot count increased with the penalty at %d of %d grid steps",
            violations,
            len(dims) - 1,
        )
    return violations


def pspline_coefficients(
    products: DesignProducts, kv: KnotVector, lam: float
) -> np.ndarray:
    """Fixed-unit-weight penalized fit (the non-adaptive comparison mode)."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if kv.n_interior == 0:
        return wpss_minimize(products, None, 0.0)
    spec = DiffSpec(kv.degree + 1, kv.dim)
    return wpss_minimize(products, penalty_matrix(spec, np.ones(spec.n_diffs)), lam)
