"""End-to-end fitting pipeline: design products, penalty path, refits, choice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import build_design, make_knots
from .glm import get_family, run_path_glm
from .selection import CRITERIA, FitResult, evaluate_path, select_best
from .solver import ARConfig, DesignProducts, LambdaPath, default_lambda_grid, run_path

__all__ = ["AsplineFit", "fit_aspline"]


@dataclass(eq=False)
class AsplineFit:
    """Full penalty-path fit with the best model per criterion."""

    path: LambdaPath
    best: dict = field(default_factory=dict)
    degree: int = 3
    domain: tuple = (0.0, 1.0)
    family: str = "gaussian"
    initial_knots: np.ndarray | None = None

    def result(self, criterion: str) -> FitResult:
        return self.best[criterion]


def fit_aspline(
    xs,
    y,
    degree: int = 3,
    n_knots: int = 40,
    domain: tuple[float, float] | None = None,
    lambdas: np.ndarray | None = None,
    family: str = "gaussian",
    cfg: ARConfig | None = None,
    criteria: tuple[str, ...] = CRITERIA,
) -> AsplineFit:
    """Fit the knot-selecting spline over a penalty grid and pick the winners.

    ``domain`` defaults to the data range. The returned object carries the
    whole evaluated path plus, for each requested criterion, the refit model
    minimizing it.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if xs.shape != y.shape:
        raise ValueError("x and y must have equal length")
    if domain is None:
        domain = (float(np.min(xs)), float(np.max(xs)))
    unknown = set(criteria) - set(CRITERIA)
    if unknown:
        raise ValueError(f"unknown criteria: {sorted(unknown)}")
    kv = make_knots(domain[0], domain[1], n_knots, degree)
    design = build_design(kv, xs)
    if lambdas is None:
        lambdas = default_lambda_grid()
    fam = get_family(family)
    if fam.name == "gaussian":
        path = run_path(DesignProducts.from_data(design, y), kv, lambdas, cfg)
    else:
        if not fam.valid_response(y):
            raise ValueError(f"response contains values invalid for the {family} family")
        path = run_path_glm(design, y, fam, kv, lambdas, cfg)
    evaluate_path(path, xs, y, kv, fam, domain)
    best = {c: select_best(path, c) for c in criteria}
    return AsplineFit(
        path=path,
        best=best,
        degree=degree,
        domain=domain,
        family=fam.name,
        initial_knots=kv.interior,
    )
