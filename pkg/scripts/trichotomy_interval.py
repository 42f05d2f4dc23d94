#!/usr/bin/env python3
"""Sweep both exponent orders on the unit interval and print the spectrum
picture: the zero eigenvalue, the excluded window up to the threshold, and
eigenpairs for every multiplier above it."""

import argparse
import tempfile
from pathlib import Path

from pq_spectra import SolverOptions, run_sweep
from pq_spectra.sweep import RunPlan


def build_plan(p, q, resolution, out_dir, seed):
    return RunPlan(
        domain="interval",
        bounds=(0.0, 1.0),
        resolution=(resolution,),
        p=p,
        q=q,
        weight_a={"kind": "constant", "value": 1.0},
        weight_b={"kind": "constant", "value": 0.0},
        oracle="full",
        grid_values=None,
        grid_multipliers=(0.5, 1.0, 1.05, 2.0, 10.0),
        include_zero=True,
        solver=SolverOptions(seed=seed),
        consistency_samples=15,
        out_dir=out_dir,
        formats=("csv", "summary", "eigenfunctions"),
        workers=1,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--resolution", type=int, default=256)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default=None)
    args = parser.parse_args()

    out_root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="pq_"))
    out_root.mkdir(parents=True, exist_ok=True)

    for p, q in ((1.5, 3.0), (4.0, 3.0)):
        plan = build_plan(p, q, args.resolution, str(out_root / f"p{p}_q{q}"), args.seed)
        report = run_sweep(plan)
        print(f"\n(p, q) = ({p}, {q})   lambda1 = {report.threshold.lambda1:.10g}")
        print(f"{'lambda':>16} {'status':<18} {'case':<9} {'J':>12} {'residual':>10}")
        for row in report.rows:
            j = f"{row.J_value:.4g}" if row.J_value == row.J_value else "-"
            r = f"{row.weak_residual:.1e}" if row.weak_residual == row.weak_residual else "-"
            print(f"{row.lam:16.8g} {row.status:<18} {row.case_tag:<9} {j:>12} {r:>10}")
    print(f"\noutputs under {out_root}")


if __name__ == "__main__":
    main()
