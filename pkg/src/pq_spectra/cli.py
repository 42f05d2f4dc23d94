"""Command-line interface.

Subcommands: ``run`` (full sweep with report emission), ``lambda1``
(threshold only) and ``verify`` (re-check a stored field as an eigenpair
candidate).  Exit codes: 0 success, 1 failed verification, 2 invalid
configuration or hypotheses, 3 threshold nonconvergence.  Per-row solver
failures inside a sweep show up as row statuses, not exit codes.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .descent import ConvergenceError
from .lambda1 import check_consistency, solve_lambda1, solve_lambda_1q
from .problem import HypothesisViolationError
from .spectrum import kkt_check
from .sweep import (
    ConfigError,
    build_problem,
    emit_outputs,
    load_field_file,
    parse_config,
    run_sweep,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3


def _apply_overrides(plan, args):
    updates = {}
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = args.out
    if getattr(args, "workers", None) is not None:
        updates["workers"] = args.workers
    if getattr(args, "seed", None) is not None:
        updates["solver"] = plan.solver.with_seed(args.seed)
    return dataclasses.replace(plan, **updates) if updates else plan


def _cmd_run(args) -> int:
    plan = _apply_overrides(parse_config(args.config), args)
    report = run_sweep(plan)
    paths = emit_outputs(report, plan)
    print(f"lambda1 = {report.threshold.lambda1:.12g}   "
          f"(lambda_1q = {report.consistency.lambda_1q:.12g}, "
          f"config {report.config_hash})")
    for row in report.rows:
        extra = f"  [{row.message}]" if row.message else ""
        print(
            f"  lam = {row.lam:<22.12g} {row.status:<17} {row.case_tag:<9}"
            f"{row.wall_ms: 10.1f} ms{extra}"
        )
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_lambda1(args) -> int:
    plan = _apply_overrides(parse_config(args.config), args)
    spec = build_problem(plan)
    if plan.oracle == "q_laplacian":
        result = solve_lambda_1q(spec, plan.solver)
        print(f"lambda_1q = {result.lambda1:.12g}")
    else:
        result = solve_lambda1(spec, plan.solver)
        consistency = check_consistency(
            spec, result, samples=plan.consistency_samples, opts=plan.solver
        )
        print(f"lambda1   = {result.lambda1:.12g}")
        print(f"lambda_1q = {consistency.lambda_1q:.12g}   "
              f"(relative gap {consistency.rel_gap:.3g})")
    residuals = result.constraint_residuals
    print(f"constraint residuals: cone {residuals[0]:.3g}, mass {residuals[1]:.3g}")
    print(f"iterations: {result.iterations}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    plan = _apply_overrides(parse_config(args.config), args)
    spec = build_problem(plan)
    field = load_field_file(spec.mesh, args.field_file)
    report = kkt_check(spec, args.lam, field, plan.solver)
    print(f"weak residual (relative): {report.weak_residual_norm:.6g}")
    print(f"cone residual (scaled):   {report.cone_residual:.6g}")
    print(f"mass identity defect:     {report.mass_identity_defect:.6g}")
    print(f"verdict at tol {report.tol:g}: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFY_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pq-spectra",
        description="Spectral threshold and eigenpair sweeps for a weighted "
        "two-exponent diffusion eigenproblem on intervals and rectangles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="solve the threshold and sweep a lambda grid")
    run_p.add_argument("config")
    lam_p = sub.add_parser("lambda1", help="solve the threshold only")
    lam_p.add_argument("config")
    ver_p = sub.add_parser("verify", help="re-check a stored field at a given lambda")
    ver_p.add_argument("config")
    ver_p.add_argument("field_file")
    ver_p.add_argument("lam", type=float)

    for p in (run_p, lam_p, ver_p):
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)

    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "lambda1": _cmd_lambda1, "verify": _cmd_verify}
    try:
        return handlers[args.command](args)
    except HypothesisViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
