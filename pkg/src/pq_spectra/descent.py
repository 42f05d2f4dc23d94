"""Preconditioned projected descent with feasibility retractions.

One generic Armijo-backtracked loop drives all three constrained solves
(threshold quotient, manifold-restricted energy, coercive energy).  Callers
supply the objective, a direction oracle returning a descent direction and
its slope, and a retraction mapping trial points back onto the constraint
set; a retraction may return None to signal an infeasible trial, which the
line search treats as a rejected step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

__all__ = ["SolverOptions", "ConvergenceError", "DescentResult", "descend"]


class ConvergenceError(RuntimeError):
    """A solve exhausted its iteration budget without meeting its test."""


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and budgets shared by all solvers.

    tol is the relative weak-residual target for eigenpair solves;
    constraint_tol bounds the scaled constraint residuals at acceptance.
    The quotient minimiser stops when the objective stagnates below
    stagnation_rtol over stagnation_window accepted steps.
    """

    tol: float = 1e-8
    max_iters: int = 600
    restarts: int = 3
    seed: int = 0
    probes: int = 64
    constraint_tol: float = 1e-10
    stagnation_window: int = 10
    stagnation_rtol: float = 1e-10
    armijo_c: float = 1e-4
    max_backtracks: int = 40
    newton_steps: int = 30

    def with_seed(self, seed: int) -> "SolverOptions":
        return replace(self, seed=seed)


@dataclass
class DescentResult:
    coefficients: np.ndarray
    history: list[float]
    iterations: int
    converged: bool
    reason: str


def descend(
    start: np.ndarray,
    value_fn: Callable[[np.ndarray], float],
    direction_fn: Callable[[np.ndarray], tuple[np.ndarray, float]],
    retract_fn: Callable[[np.ndarray], Optional[np.ndarray]],
    opts: SolverOptions,
    stop_fn: Callable[[np.ndarray], bool] | None = None,
    abort_fn: Callable[[np.ndarray], bool] | None = None,
) -> DescentResult:
    current = retract_fn(np.asarray(start, dtype=float))
    if current is None:
        raise ConvergenceError("the starting point admits no feasible retraction")
    f_current = value_fn(current)
    history = [f_current]
    step = 1.0

    for iteration in range(1, opts.max_iters + 1):
        if stop_fn is not None and stop_fn(current):
            return DescentResult(current, history, iteration - 1, True, "tolerance")
        if abort_fn is not None and abort_fn(current):
            return DescentResult(current, history, iteration - 1, False, "aborted")

        direction, slope = direction_fn(current)
        if not np.all(np.isfinite(direction)) or slope >= 0.0:
            # no descent direction left at working precision
            return DescentResult(current, history, iteration - 1, True, "stationary")

        alpha = min(2.0 * step, 1e3)
        accepted = False
        backtracked = False
        for _ in range(opts.max_backtracks):
            trial = retract_fn(current + alpha * direction)
            if trial is not None:
                f_trial = value_fn(trial)
                if f_trial <= f_current + opts.armijo_c * alpha * slope:
                    accepted = True
                    break
            alpha *= 0.5
            backtracked = True
        if not accepted:
            return DescentResult(
                current, history, iteration, True, "linesearch_floor"
            )

        expanded = False
        if not backtracked:
            # first trial already passed: expand while it keeps improving
            for _ in range(10):
                wider = retract_fn(current + 2.0 * alpha * direction)
                if wider is None:
                    break
                f_wider = value_fn(wider)
                if f_wider >= f_trial:
                    break
                trial, f_trial, alpha = wider, f_wider, 2.0 * alpha
                expanded = True

        if not expanded:
            # quadratic refinement: the Armijo step can sit in the regime
            # where the stiffest modes reflect instead of contract; the
            # parabola through f(0), f'(0), f(alpha) locates the valley
            curvature = f_trial - f_current - slope * alpha
            if curvature > 0.0:
                alpha_hat = -0.5 * slope * alpha * alpha / curvature
                if 0.0 < alpha_hat < alpha:
                    refined = retract_fn(current + alpha_hat * direction)
                    if refined is not None:
                        f_refined = value_fn(refined)
                        if f_refined < f_trial:
                            trial, f_trial, alpha = refined, f_refined, alpha_hat

        current, f_current, step = trial, f_trial, alpha
        history.append(f_current)

        w = opts.stagnation_window
        if len(history) > w:
            drop = history[-w - 1] - history[-1]
            if drop <= opts.stagnation_rtol * max(abs(history[-1]), 1e-300):
                return DescentResult(current, history, iteration, True, "stagnation")

    if stop_fn is not None and stop_fn(current):
        return DescentResult(current, history, opts.max_iters, True, "tolerance")
    return DescentResult(current, history, opts.max_iters, False, "max_iters")


def smoothed_random_field(
    n_nodes: int,
    rng: np.random.Generator,
    precond: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """Sign-balanced random field smoothed by one preconditioner solve."""
    raw = rng.standard_normal(n_nodes)
    raw -= raw.mean()
    smooth = precond(raw)
    smooth -= smooth.mean()
    peak = np.abs(smooth).max()
    return smooth / peak if peak > 0 else raw
