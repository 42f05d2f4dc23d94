#!/usr/bin/env python3
"""Show that the threshold does not depend on the first exponent when it
stays below the second: sweep p and compare with the pure q-power value."""

import argparse

import numpy as np

from pq_spectra import ProblemSpec, SolverOptions, build_interval_mesh
from pq_spectra import solve_lambda1, solve_lambda_1q


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--resolution", type=int, default=256)
    parser.add_argument("--q", type=float, default=3.0)
    parser.add_argument("--p-values", type=float, nargs="+",
                        default=[1.2, 1.5, 2.0, 2.5, 2.9])
    args = parser.parse_args()

    mesh = build_interval_mesh(args.resolution, 0.0, 1.0)
    a = np.ones(mesh.n_nodes)
    b = np.zeros(mesh.boundary_nodes.size)
    opts = SolverOptions()

    reference = solve_lambda_1q(
        ProblemSpec(mesh=mesh, p=1.5, q=args.q, weight_a=a, weight_b=b), opts
    ).lambda1
    print(f"pure q-power value (q={args.q}): {reference:.10g}\n")
    print(f"{'p':>6} {'lambda1':>16} {'relative gap':>14}")
    for p in args.p_values:
        spec = ProblemSpec(mesh=mesh, p=p, q=args.q, weight_a=a, weight_b=b)
        value = solve_lambda1(spec, opts).lambda1
        print(f"{p:6.2f} {value:16.10g} {abs(value - reference) / reference:14.2e}")


if __name__ == "__main__":
    main()
