"""Batch front door: fit, infer, simulate, oracle.

Exit codes: 0 success, 2 schema, 3 solver, 4 precision, 5 scenario,
1 anything else. Flags mirror scenario-file keys and override them; the
HDCOX_THREADS environment variable overrides any thread setting.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .data import load_csv
from .errors import HdcoxError, PrecisionError, ScenarioError, SchemaError, SolverError
from .inference import write_report_csv, write_report_jsonl
from .lasso import cross_validate, fit_lasso
from .pipeline import fit_and_infer
from .simulation import (
    format_coverage_text,
    load_scenario,
    pseudo_true_oracle,
    run_replications,
    write_coverage_csv,
)

EXIT_SCHEMA = 2
EXIT_SOLVER = 3
EXIT_PRECISION = 4
EXIT_SCENARIO = 5


def _lambda_policy(text):
    if text == "cv":
        return "cv"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--lambda takes 'cv' or a positive number")
    if value <= 0:
        raise argparse.ArgumentTypeError("fixed lambda must be positive")
    return value


def _level(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("--level must be inside (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdcox",
        description="Debiased-Lasso inference for high-dimensional survival models "
                    "(note: the penalty is 2*lambda*||beta||_1, a factor of two "
                    "stronger than most toolkits at equal lambda)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="penalized fit on a CSV dataset")
    fit.add_argument("--input", required=True)
    fit.add_argument("--lambda", dest="lambda_policy", type=_lambda_policy, default="cv")
    fit.add_argument("--out", required=True)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--folds", type=int, default=10)
    fit.add_argument("--grid-size", type=int, default=100)
    fit.add_argument("--grid-min-ratio", type=float, default=0.01)

    infer = sub.add_parser("infer", help="full debiased-inference report")
    infer.add_argument("--input", required=True)
    infer.add_argument("--lambda", dest="lambda_policy", type=_lambda_policy, default="cv")
    infer.add_argument("--variance", choices=("robust", "model", "both"), default="both")
    infer.add_argument("--level", type=_level, default=0.95)
    infer.add_argument("--nodewise", choices=("cv", "default"), default="cv")
    infer.add_argument("--nodewise-c", type=float, default=0.5)
    infer.add_argument("--seed", type=int, default=0)
    infer.add_argument("--folds", type=int, default=10)
    infer.add_argument("--grid-size", type=int, default=100)
    infer.add_argument("--out", required=True)
    infer.add_argument("--format", choices=("csv", "jsonl"), default=None,
                       help="default: by --out extension")
    infer.add_argument("--no-figures", action="store_true")

    sim = sub.add_parser("simulate", help="run a scenario and report coverage")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--reps", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--threads", type=int, default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--raw", default=None, help="optional per-replicate JSON lines")
    sim.add_argument("--no-figures", action="store_true")

    orc = sub.add_parser("oracle", help="large-sample limiting coefficients")
    orc.add_argument("--scenario", required=True)
    orc.add_argument("--n", type=int, default=200_000)
    orc.add_argument("--seed", type=int, default=None)
    orc.add_argument("--out", required=True)
    return parser


def _figure_path(out_path):
    stem, _ = os.path.splitext(str(out_path))
    return stem + ".png"


def cmd_fit(args) -> int:
    ds = load_csv(args.input)
    if args.lambda_policy == "cv":
        cv = cross_validate(ds, folds=args.folds, seed=args.seed,
                            grid_size=args.grid_size,
                            grid_min_ratio=args.grid_min_ratio)
        lam = cv.lambda_selected
    else:
        lam = args.lambda_policy
    fit = fit_lasso(ds, lam)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "beta_hat", "lambda", "kkt_violation", "n_iterations"])
        for j, bj in enumerate(fit.beta_hat, start=1):
            writer.writerow([j, format(bj, ".12g"), format(fit.lam, ".12g"),
                             format(fit.kkt_violation, ".6g"), fit.n_iterations])
    print(f"wrote {args.out} (lambda={fit.lam:.6g}, "
          f"support={fit.support.size}/{ds.p})")
    return 0


def cmd_infer(args) -> int:
    ds = load_csv(args.input)
    variance = "robust" if args.variance in ("robust", "both") else "model"
    result = fit_and_infer(
        ds,
        lambda_policy=args.lambda_policy,
        nodewise_policy=args.nodewise,
        level=args.level,
        variance=variance,
        seed=args.seed,
        cv_folds=args.folds,
        grid_size=args.grid_size,
        nodewise_c=args.nodewise_c,
    )
    fmt = args.format or ("jsonl" if str(args.out).endswith(".jsonl") else "csv")
    writer = write_report_jsonl if fmt == "jsonl" else write_report_csv
    writer(result.report, args.out)
    written = [str(args.out)]
    if args.variance == "both":
        from .inference import confidence_intervals

        other = confidence_intervals(
            result.b_hat, result.sigma_robust_sq, result.sigma_model_sq,
            ds.n, level=args.level, variance="model",
        )
        stem, ext = os.path.splitext(str(args.out))
        other_path = f"{stem}.model{ext or '.csv'}"
        writer(other, other_path)
        written.append(other_path)
    if not args.no_figures:
        from .plots import render_inference_figure

        written.append(render_inference_figure(result.report, _figure_path(args.out)))
    print("wrote " + ", ".join(written))
    return 0


def cmd_simulate(args) -> int:
    overrides = {}
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    spec = load_scenario(args.scenario, overrides)
    report = run_replications(spec, raw_path=args.raw)
    write_coverage_csv(report, args.out)
    written = [str(args.out)]
    if not args.no_figures:
        from .plots import render_coverage_figure

        written.append(render_coverage_figure(report, spec.ci_level,
                                              _figure_path(args.out)))
    print(format_coverage_text(report))
    print("wrote " + ", ".join(written))
    return 0


def cmd_oracle(args) -> int:
    overrides = {"seed": args.seed} if args.seed is not None else None
    spec = load_scenario(args.scenario, overrides)
    beta0 = pseudo_true_oracle(
        hazard=spec.hazard,
        covariance=spec.covariance,
        p=spec.p,
        n_large=args.n,
        target_censoring=spec.target_censoring,
        seed=spec.seed,
        truncation=spec.truncation,
        truncation_mode=spec.truncation_mode,
        rho=spec.rho,
        s0=spec.s0,
        coef_seed=spec.coef_seed,
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "beta0"])
        for j, v in enumerate(beta0, start=1):
            writer.writerow([j, format(v, ".12g")])
    print(f"wrote {args.out} (max |beta0_j| = {np.abs(beta0).max():.4g})")
    return 0


_DISPATCH = {"fit": cmd_fit, "infer": cmd_infer, "simulate": cmd_simulate,
             "oracle": cmd_oracle}

_EXIT_BY_KIND = (
    (SchemaError, EXIT_SCHEMA, "schema error"),
    (SolverError, EXIT_SOLVER, "solver error"),
    (PrecisionError, EXIT_PRECISION, "precision error"),
    (ScenarioError, EXIT_SCENARIO, "scenario error"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except HdcoxError as exc:
        for kind, code, label in _EXIT_BY_KIND:
            if isinstance(exc, kind):
                print(f"{label}: {exc}", file=sys.stderr)
                return code
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
