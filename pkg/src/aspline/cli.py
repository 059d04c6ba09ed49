"""Command-line interface: fit a CSV dataset, run a scenario, dump a basis.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__
from .basis import build_design, make_knots
from .errors import DataError, NumericalError
from .fit import fit_aspline
from .selection import CRITERIA
from .simulation import ScenarioConfig, run_scenario, write_scenario_csv
from .solver import default_lambda_grid

REPORT_SCHEMA_VERSION = 1


def _read_xy_csv(path: str, x_col: str, y_col: str) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a header row")
        for col in (x_col, y_col):
            if col not in reader.fieldnames:
                raise DataError(
                    f"{path}: column {col!r} not found; header has {reader.fieldnames}"
                )
        for row in reader:
            line = reader.line_num
            try:
                xs.append(float(row[x_col]))
                ys.append(float(row[y_col]))
            except (TypeError, ValueError) as err:
                raise DataError(f"{path}, line {line}: {err}") from err
    x = np.array(xs)
    y = np.array(ys)
    if x.size == 0:
        raise DataError(f"{path}: no data rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        bad = int(np.argmax(~(np.isfinite(x) & np.isfinite(y))))
        raise DataError(f"{path}: non-finite value in data row {bad + 1}")
    return x, y


def _validate_response(y: np.ndarray, family: str) -> None:
    if family == "poisson":
        if np.any(y < 0) or np.any(y != np.floor(y)):
            raise DataError("poisson responses must be non-negative integers")
    elif family == "binomial":
        if not np.all(np.isin(y, (0.0, 1.0))):
            raise DataError("binomial responses must be 0 or 1")


def cmd_fit(args) -> int:
    x, y = _read_xy_csv(args.input, args.x, args.y)
    _validate_response(y, args.family)
    if len(x) < args.degree + 2:
        raise DataError(f"need at least degree + 2 = {args.degree + 2} observations")
    domain = None
    if args.domain is not None:
        domain = (args.domain[0], args.domain[1])
    lambdas = default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    t0 = time.perf_counter()
    fit = fit_aspline(
        x,
        y,
        degree=args.degree,
        n_knots=args.knots,
        domain=domain,
        lambdas=lambdas,
        family=args.family,
    )
    elapsed = time.perf_counter() - t0
    res = fit.result(args.criterion)
    grid = np.linspace(fit.domain[0], fit.domain[1], args.grid_size)
    fitted = res.predict(grid)
    trace = []
    for entry in fit.path.entries:
        row = {"lambda": entry.lam}
        if entry.fit is None:
            row["error"] = entry.error
        else:
            row.update(
                {
                    "k_lambda": entry.fit.k_lambda,
                    "aic": entry.fit.criteria["aic"],
                    "bic": entry.fit.criteria["bic"],
                    "ebic0": entry.fit.criteria["ebic0"],
                }
            )
        trace.append(row)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "family": fit.family,
        "criterion": args.criterion,
        "degree": fit.degree,
        "domain": list(fit.domain),
        "initial_knot_count": args.knots,
        "lambda_grid": {
            "min": args.lambda_min,
            "max": args.lambda_max,
            "count": args.lambda_count,
        },
        "selected_knots": [float(t) for t in res.selected_knots],
        "k_lambda": res.k_lambda,
        "model_dim": res.model_dim,
        "coefficients": [float(c) for c in res.coefficients],
        "ss_or_deviance": res.ss_or_deviance,
        "criteria": res.criteria,
        "lambda": res.lam,
        "fitted_grid": {"x": [float(g) for g in grid], "y": [float(v) for v in fitted]},
        "criterion_trace": trace,
        "metadata": {
            "package_version": __version__,
            "n_observations": int(len(x)),
            "seed": None,
            "runtime_seconds": elapsed,
        },
    }
    text = json.dumps(report, indent=2)
    if args.output == "-":
        print(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
        print(
            f"fit: {res.k_lambda} knots kept, model dimension {res.model_dim}, "
            f"report written to {args.output}"
        )
    return 0


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except OSError as err:
        raise DataError(f"cannot read {args.config}: {err}") from err
    except json.JSONDecodeError as err:
        _usage_error(f"{args.config}: invalid JSON: {err}")
    try:
        config = ScenarioConfig.from_dict(raw)
    except (ValueError, TypeError) as err:
        _usage_error(f"{args.config}: {err}")
    result = run_scenario(config)
    write_scenario_csv(result, args.output)
    print(
        f"scenario: function={config.function} n={config.n} reps={config.reps} "
        f"seed={config.seed} failed={result.n_failed}"
    )
    for crit, s in result.summaries.items():
        print(
            f"  {crit}: median MSE {s.median_mse:.6g}, "
            f"median model dimension {s.median_model_dim:g}"
        )
    print(f"per-replication results written to {args.output}")
    return 0


def cmd_basis(args) -> int:
    kv = make_knots(0.0, 1.0, args.knots, args.degree)
    grid = np.linspace(0.0, 1.0, args.grid)
    dense = build_design(kv, grid).to_dense()
    out = sys.stdout if args.output == "-" else open(args.output, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(["x"] + [f"b{j}" for j in range(kv.dim)])
        for xi, row in zip(grid, dense):
            writer.writerow([repr(float(xi))] + [repr(float(v)) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _usage_error(message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(2)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aspline",
        description="Spline regression with automatic knot selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a CSV dataset and write a JSON report")
    p_fit.add_argument("--input", required=True, help="input CSV with a header row")
    p_fit.add_argument("--x", default="x", help="x column name (default: x)")
    p_fit.add_argument("--y", default="y", help="y column name (default: y)")
    p_fit.add_argument("--degree", type=int, default=3)
    p_fit.add_argument("--knots", type=int, default=40, help="initial interior knot count")
    p_fit.add_argument(
        "--family", choices=("gaussian", "poisson", "binomial"), default="gaussian"
    )
    p_fit.add_argument("--criterion", choices=CRITERIA, default="ebic0")
    p_fit.add_argument("--lambda-min", type=float, default=1e-4)
    p_fit.add_argument("--lambda-max", type=float, default=1e6)
    p_fit.add_argument("--lambda-count", type=int, default=100)
    p_fit.add_argument("--domain", type=float, nargs=2, metavar=("LO", "HI"))
    p_fit.add_argument("--grid-size", type=int, default=200)
    p_fit.add_argument("--output", default="-", help="report path, or - for stdout")
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a benchmark scenario from a JSON config")
    p_sim.add_argument("--config", required=True, help="scenario config (JSON)")
    p_sim.add_argument("--output", required=True, help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_basis = sub.add_parser("basis", help="sample a basis on a uniform grid as CSV")
    p_basis.add_argument("--degree", type=int, default=3)
    p_basis.add_argument("--knots", type=int, default=3)
    p_basis.add_argument("--grid", type=int, default=101)
    p_basis.add_argument("--output", default="-")
    p_basis.set_defaults(func=cmd_basis)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "degree", 0) < 0 or getattr(args, "knots", 0) < 0:
        _usage_error("degree and knot count must be non-negative")
    if getattr(args, "grid", 2) < 2 or getattr(args, "grid_size", 2) < 2:
        _usage_error("grid sizes must be at least 2")
    try:
        return args.func(args)
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
