#!/usr/bin/env python3
"""Refinement study of the threshold on the interval and the unit square."""

import argparse

import numpy as np

from pq_spectra import (
    ProblemSpec,
    SolverOptions,
    build_interval_mesh,
    build_rectangle_mesh,
    solve_lambda1,
)


def spec_for(mesh, p, q):
    return ProblemSpec(
        mesh=mesh,
        p=p,
        q=q,
        weight_a=np.ones(mesh.n_nodes),
        weight_b=np.zeros(mesh.boundary_nodes.size),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--p", type=float, default=1.5)
    parser.add_argument("--q", type=float, default=3.0)
    args = parser.parse_args()
    opts = SolverOptions()

    print(f"interval, p={args.p}, q={args.q}")
    print(f"{'elements':>10} {'lambda1':>16} {'change':>10}")
    previous = None
    for n in (64, 128, 256, 512, 1024):
        mesh = build_interval_mesh(n, 0.0, 1.0)
        value = solve_lambda1(spec_for(mesh, args.p, args.q), opts).lambda1
        change = "-" if previous is None else f"{abs(value - previous) / value:.2e}"
        print(f"{n:>10} {value:16.10g} {change:>10}")
        previous = value

    print(f"\nunit square, p={args.p}, q={args.q}")
    print(f"{'grid':>10} {'lambda1':>16} {'change':>10}")
    previous = None
    for n in (8, 16, 32):
        mesh = build_rectangle_mesh(n, n, (0.0, 1.0, 0.0, 1.0))
        value = solve_lambda1(spec_for(mesh, args.p, args.q), opts).lambda1
        change = "-" if previous is None else f"{abs(value - previous) / value:.2e}"
        print(f"{n:>7}x{n:<3} {value:16.10g} {change:>10}")
        previous = value


if __name__ == "__main__":
    main()
