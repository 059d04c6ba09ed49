"""Penalized iteratively reweighted least squares for exponential families.

Supports Gaussian, Poisson and Binomial responses with their canonical
links. One IRLS step solves

    a = (B^T Omega B + lam * D^T W D)^{-1} B^T (Omega eta + y - mu)

with ``Omega`` the diagonal of ``1 / (V(mu) g'(mu)^2)``. The knot-selection
outer loop wraps a fully converged IRLS inner loop: difference weights are
updated only after IRLS has converged for the current weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit, xlogy

from .basis import DesignMatrix, KnotVector
from .errors import DivergenceError
from .linalg import BandedSymMatrix, add_scaled, solve, xtwx, xty
from .penalty import DiffSpec, penalty_matrix, update_weights, weighted_scores
from .solver import ARConfig, ARState, LambdaPath, PathEntry, _factor_penalized

__all__ = [
    "Family",
    "IRLSConfig",
    "IRLSState",
    "gaussian",
    "poisson",
    "binomial",
    "get_family",
    "irls_step",
    "irls_fit",
    "adaptive_ridge_glm",
    "run_path_glm",
]

# Linear predictors are clipped here before applying exp/expit so that
# fitted means stay finite and inside the family's mean domain.
_ETA_LIMIT = 700.0
_MU_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Family:
    """Response family with canonical link.

    Fields are the link ``g``, its inverse, its derivative ``g'``, the
    variance function ``V`` and a validity predicate for raw responses.
    """

    name: str
    link: Callable[[np.ndarray], np.ndarray]
    inverse_link: Callable[[np.ndarray], np.ndarray]
    dlink: Callable[[np.ndarray], np.ndarray]
    variance: Callable[[np.ndarray], np.ndarray]
    valid_response: Callable[[np.ndarray], bool]
    deviance: Callable[[np.ndarray, np.ndarray], float]
    init_mu: Callable[[np.ndarray], np.ndarray]


def gaussian() -> Family:
    return Family(
        name="gaussian",
        link=lambda mu: mu,
        inverse_link=lambda eta: eta,
        dlink=lambda mu: np.ones_like(mu),
        variance=lambda mu: np.ones_like(mu),
        valid_response=lambda y: bool(np.all(np.isfinite(y))),
        deviance=lambda y, mu: float(np.sum((y - mu) ** 2)),
        init_mu=lambda y: y.astype(float).copy(),
    )


def poisson() -> Family:
    return Family(
        name="poisson",
        link=lambda mu: np.log(mu),
        inverse_link=lambda eta: np.maximum(
            np.exp(np.clip(eta, -_ETA_LIMIT, _ETA_LIMIT)), _MU_FLOOR
        ),
        dlink=lambda mu: 1.0 / mu,
        variance=lambda mu: mu,
        valid_response=lambda y: bool(np.all(np.isfinite(y)) and np.all(y >= 0)),
        deviance=lambda y, mu: float(2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) - (y - mu))),
        init_mu=lambda y: y + 0.1,
    )


def binomial() -> Family:
    return Family(
        name="binomial",
        link=lambda mu: np.log(mu) - np.log1p(-mu),
        inverse_link=lambda eta: np.clip(expit(eta), _MU_FLOOR, 1.0 - _MU_FLOOR),
        dlink=lambda mu: 1.0 / (mu * (1.0 - mu)),
        variance=lambda mu: mu * (1.0 - mu),
        valid_response=lambda y: bool(np.all(np.isfinite(y)) and np.all((y >= 0) & (y <= 1))),
        deviance=lambda y, mu: float(
            2.0
            * np.sum(
                xlogy(y, y)
                - xlogy(y, mu)
                + xlogy(1.0 - y, 1.0 - y)
                - xlogy(1.0 - y, 1.0 - mu)
            )
        ),
        init_mu=lambda y: (y + 0.5) / 2.0,
    )


_FAMILIES = {"gaussian": gaussian, "poisson": poisson, "binomial": binomial}


def get_family(name: str) -> Family:
    try:
        return _FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(_FAMILIES)}") from None


@dataclass(frozen=True)
class IRLSConfig:
    tol: float = 1e-8
    max_iter: int = 50
    omega_floor: float = 1e-10
    omega_ceil: float = 1e10
    divergence_streak: int = 3


@dataclass(frozen=True, eq=False)
class IRLSState:
    """State after one or more IRLS steps."""

    coef: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    deviance: float
    n_iter: int
    converged: bool
    deviance_trace: tuple = ()


def _omega(family: Family, mu: np.ndarray, cfg: IRLSConfig) -> np.ndarray:
    g1 = family.dlink(mu)
    return np.clip(1.0 / (family.variance(mu) * g1 * g1), cfg.omega_floor, cfg.omega_ceil)


def _initial_state(
    design: DesignMatrix,
    y: np.ndarray,
    family: Family,
    cfg: IRLSConfig,
    init_coef: np.ndarray | None,
) -> IRLSState:
    if init_coef is not None:
        coef = np.asarray(init_coef, dtype=float)
        eta = design.dot(coef)
        mu = family.inverse_link(eta)
    else:
        # Safe mean start; eta is taken from the means, not from coefficients.
        coef = np.zeros(design.n_cols)
        mu = family.init_mu(y)
        eta = family.link(mu)
    return IRLSState(coef, eta, mu, _omega(family, mu, cfg), family.deviance(y, mu), 0, False)


def irls_step(
    design: DesignMatrix,
    y: np.ndarray,
    family: Family,
    state: IRLSState,
    pen: BandedSymMatrix | None,
    lam: float,
    cfg: IRLSConfig | None = None,
) -> IRLSState:
    """One penalized IRLS update from the given state."""
    cfg = cfg or IRLSConfig()
    system = xtwx(design, state.omega)
    if pen is not None and lam > 0:
        system = add_scaled(system, pen, lam)
    rhs = xty(design, state.omega * state.eta + y - state.mu)
    coef = solve(_factor_penalized(system), rhs)
    eta = design.dot(coef)
    mu = family.inverse_link(eta)
    return IRLSState(
        coef,
        eta,
        mu,
        _omega(family, mu, cfg),
        family.deviance(y, mu),
        state.n_iter + 1,
        False,
        state.deviance_trace,
    )


def irls_fit(
    design: DesignMatrix,
    y: np.ndarray,
    family: Family,
    pen: BandedSymMatrix | None,
    lam: float,
    cfg: IRLSConfig | None = None,
    init_coef: np.ndarray | None = None,
) -> IRLSState:
    """Iterate IRLS steps until the relative deviance change drops to ``cfg.tol``.

    Raises
    ------
    DivergenceError
        If the deviance increases on ``cfg.divergence_streak`` consecutive
        steps; no step-halving is attempted.
    """
    y = np.asarray(y, dtype=float)
    if not family.valid_response(y):
        raise ValueError(f"response contains values invalid for the {family.name} family")
    cfg = cfg or IRLSConfig()
    state = _initial_state(design, y, family, cfg, init_coef)
    trace = [state.deviance]
    streak = 0
    converged = False
    for it in range(cfg.max_iter):
        new = irls_step(design, y, family, state, pen, lam, cfg)
        trace.append(new.deviance)
        # The transition out of the coefficient-free start state does not
        # count toward divergence; increases below rounding scale neither.
        if it > 0 and new.deviance > state.deviance + max(1e-8, 1e-10 * abs(state.deviance)):
            streak += 1
            if streak >= cfg.divergence_streak:
                raise DivergenceError(
                    f"deviance increased on {streak} consecutive IRLS steps "
                    f"(family={family.name}, lam={lam:.3e})",
                    deviance_trace=trace,
                )
        else:
            streak = 0
        delta = abs(new.deviance - state.deviance)
        real_previous = it > 0 or init_coef is not None
        state = new
        if real_previous and delta <= cfg.tol * max(1.0, abs(state.deviance)):
            converged = True
            break
    return IRLSState(
        state.coef,
        state.eta,
        state.mu,
        state.omega,
        state.deviance,
        state.n_iter,
        converged,
        tuple(trace),
    )


def adaptive_ridge_glm(
    design: DesignMatrix,
    y: np.ndarray,
    family: Family,
    kv: KnotVector,
    lam: float,
    cfg: ARConfig | None = None,
    irls_cfg: IRLSConfig | None = None,
    init: np.ndarray | None = None,
) -> ARState:
    """Knot-selection iteration with an IRLS inner loop.

    Identical to the linear-model solver except that each weighted ridge
    minimization is replaced by a converged penalized IRLS fit.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    cfg = cfg or ARConfig()
    irls_cfg = irls_cfg or IRLSConfig()
    p = kv.dim
    k = kv.n_interior
    if k == 0:
        fitted = irls_fit(design, y, family, None, 0.0, irls_cfg, init_coef=init)
        empty = np.zeros(0)
        return ARState(fitted.coef, empty, lam, empty, np.zeros(0, dtype=bool), 1, True)

    spec = DiffSpec(kv.degree + 1, p)
    if init is None:
        a = np.zeros(p)
        w = np.ones(k)
        coef_start = None
    else:
        a = np.asarray(init, dtype=float)
        w = update_weights(a, spec, cfg.epsilon)
        coef_start = a
    sel_prev = None
    converged = False
    n_iter = 0
    for n_iter in range(1, cfg.max_iter + 1):
        fitted = irls_fit(
            design, y, family, penalty_matrix(spec, w), lam, irls_cfg, init_coef=coef_start
        )
        a_new = fitted.coef
        w = update_weights(a_new, spec, cfg.epsilon)
        scores = weighted_scores(a_new, spec, cfg.epsilon)
        sel = scores >= cfg.sel_threshold
        delta = np.max(np.abs(a_new - a)) / (1.0 + np.max(np.abs(a)))
        stable = sel_prev is not None and np.array_equal(sel, sel_prev)
        a, sel_prev, coef_start = a_new, sel, a_new
        if delta <= cfg.tol and stable:
            converged = True
            break
    return ARState(a, w, float(lam), scores, sel, n_iter, converged)


def run_path_glm(
    design: DesignMatrix,
    y: np.ndarray,
    family: Family,
    kv: KnotVector,
    lambdas: np.ndarray,
    cfg: ARConfig | None = None,
    irls_cfg: IRLSConfig | None = None,
) -> LambdaPath:
    """Warm-started penalty path for a generalized linear model."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambdas must be a non-empty vector")
    if np.any(lambdas <= 0):
        raise ValueError("all penalties must be positive")
    path = LambdaPath()
    coef = None
    for lam in lambdas:
        state = adaptive_ridge_glm(design, y, family, kv, lam, cfg, irls_cfg, init=coef)
        coef = state.coef
        path.entries.append(PathEntry(float(lam), state))
    return path
