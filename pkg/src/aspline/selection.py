"""Information criteria, unpenalized refits and best-model choice along a path.

After the adaptive ridge has decided which knots to keep at each penalty,
the model actually reported is the plain (unpenalized) fit on the kept
knots. Criteria compare those refits on the deviance scale: for Gaussian
fits the goodness-of-fit term is the profiled quantity ``n * log(SS / n)``
(twice the negative maximized log-likelihood up to a constant), for other
families the family deviance. The criterion formulas themselves take that
goodness-of-fit value together with the model dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .basis import KnotVector, build_design, spline_values
from .errors import NumericalError, RankDeficientBasisError, SingularMatrixError
from .glm import Family, IRLSConfig, gaussian, irls_fit
from .linalg import cholesky, solve, xtx, xty
from .solver import LambdaPath

__all__ = [
    "FitResult",
    "aic",
    "bic",
    "ebic0",
    "gaussian_gof",
    "refit",
    "evaluate_path",
    "select_best",
]

CRITERIA = ("aic", "bic", "ebic0")


def aic(gof: float, model_dim: int) -> float:
    """Akaike criterion: goodness-of-fit term plus twice the model dimension."""
    return float(gof) + 2.0 * model_dim


def bic(gof: float, model_dim: int, n: int) -> float:
    """Bayesian criterion: dimension penalized by ``log n``."""
    return float(gof) + model_dim * float(np.log(n))


def log_binom(n: int, k: int) -> float:
    """``log C(n, k)`` through log-gamma, safe for large arguments."""
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def ebic0(gof: float, model_dim: int, n: int, full_dim: int) -> float:
    """Extended Bayesian criterion with a uniform prior over model dimension.

    Adds ``2 log C(full_dim, model_dim)`` to the BIC, so models of every
    dimension carry equal prior mass and large candidate sets do not favor
    mid-sized models.
    """
    if model_dim > full_dim:
        raise ValueError("model_dim cannot exceed full_dim")
    return bic(gof, model_dim, n) + 2.0 * log_binom(full_dim, model_dim)


def gaussian_gof(ss: float, n: int) -> float:
    """Criterion goodness-of-fit term for Gaussian fits, ``n * log(SS / n)``.

    This is the profiled deviance scale on which dimension penalties of
    order ``log n`` are calibrated; raw sums of squares would make the
    penalties overwhelm any realistic fit improvement at small noise levels.
    """
    return n * float(np.log(max(float(ss), 1e-300) / n))


@dataclass(frozen=True, eq=False)
class FitResult:
    """Refit model on the selected knots, with its criterion values.

    ``criteria`` maps criterion names to values; ``ss_or_deviance`` is the
    residual sum of squares for Gaussian fits and the family deviance
    otherwise. ``predict`` evaluates the fitted mean function.
    """

    selected_knots: np.ndarray
    k_lambda: int
    coefficients: np.ndarray
    model_dim: int
    ss_or_deviance: float
    criteria: dict
    lam: float
    knots: KnotVector
    family: str = "gaussian"

    def predict(self, xs) -> np.ndarray:
        eta = spline_values(self.knots, self.coefficients, xs)
        if self.family == "gaussian":
            return eta
        from .glm import get_family

        return get_family(self.family).inverse_link(eta)


def refit(
    xs: np.ndarray,
    y: np.ndarray,
    selected_knots: np.ndarray,
    degree: int,
    family: Family | None = None,
    domain: tuple[float, float] | None = None,
) -> tuple[np.ndarray, float, KnotVector]:
    """Unpenalized fit on the reduced knot set.

    Returns ``(coefficients, ss_or_deviance, reduced_knot_vector)``. Gaussian
    responses use the banded normal equations; other families a plain IRLS
    fit. A rank-deficient reduced design (possible when a knot interval
    contains no data) raises :class:`RankDeficientBasisError` naming the
    knot span of the unidentifiable basis function.
    """
    xs = np.asarray(xs, dtype=float)
    y = np.asarray(y, dtype=float)
    if domain is None:
        domain = (float(np.min(xs)), float(np.max(xs)))
    kv = KnotVector(domain[0], domain[1], np.asarray(selected_knots, dtype=float), degree)
    design = build_design(kv, xs)
    try:
        if family is None or family.name == "gaussian":
            coef = solve(cholesky(xtx(design)), xty(design, y))
            stat = float(np.sum((y - design.dot(coef)) ** 2))
        else:
            state = irls_fit(design, y, family, None, 0.0, IRLSConfig())
            coef = state.coef
            stat = state.deviance
    except SingularMatrixError as err:
        full = kv.full_knots()
        i = err.pivot_index
        raise RankDeficientBasisError(i, (full[i], full[i + degree + 1])) from err
    return coef, stat, kv


def evaluate_path(
    path: LambdaPath,
    xs: np.ndarray,
    y: np.ndarray,
    kv: KnotVector,
    family: Family | None = None,
    domain: tuple[float, float] | None = None,
) -> LambdaPath:
    """Attach a refit :class:`FitResult` to every path entry, in place.

    Entries sharing a selected knot set share one refit computation. Refit
    failures are recorded on the entry instead of aborting the path.
    """
    family = family or gaussian()
    n = len(y)
    full_dim = kv.dim
    cache: dict[tuple, tuple | Exception] = {}
    for entry in path.entries:
        key = tuple(np.flatnonzero(entry.state.sel))
        if key not in cache:
            knots = kv.interior[entry.state.sel]
            try:
                coef, stat, kv_red = refit(
                    xs, y, knots, kv.degree, family, domain or (kv.domain_lo, kv.domain_hi)
                )
                gof = gaussian_gof(stat, n) if family.name == "gaussian" else stat
                dim = kv_red.dim
                crit = {
                    "aic": aic(gof, dim),
                    "bic": bic(gof, dim, n),
                    "ebic0": ebic0(gof, dim, n, full_dim),
                }
                cache[key] = (knots, coef, stat, dim, crit, kv_red)
            except NumericalError as err:
                cache[key] = err
        cached = cache[key]
        if isinstance(cached, Exception):
            entry.fit = None
            entry.error = str(cached)
            continue
        knots, coef, stat, dim, crit, kv_red = cached
        entry.fit = FitResult(
            selected_knots=knots,
            k_lambda=len(knots),
            coefficients=coef,
            model_dim=dim,
            ss_or_deviance=stat,
            criteria=dict(crit),
            lam=entry.lam,
            knots=kv_red,
            family=family.name,
        )
        entry.error = None
    return path


def select_best(path: LambdaPath, criterion: str) -> FitResult:
    """Smallest-criterion fit along the path.

    Entries with the same selected knot set are collapsed to the largest
    penalty producing that set before comparison; remaining exact ties are
    also broken toward the larger penalty.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    fitted = [e for e in path.entries if e.fit is not None]
    if not fitted:
        raise NumericalError("no path entry produced a valid refit")
    by_model: dict[tuple, object] = {}
    for entry in fitted:
        key = tuple(entry.fit.selected_knots)
        if key not in by_model or entry.lam > by_model[key].lam:
            by_model[key] = entry
    best = min(by_model.values(), key=lambda e: (e.fit.criteria[criterion], -e.lam))
    return best.fit
