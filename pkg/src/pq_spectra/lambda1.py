"""Spectral threshold solves: the constrained quotient minimum and checks.

The threshold is the infimum of T2/T3 over nonzero cone fields; it is
computed by minimising the quotient over the doubly-constrained set
{g = 0, T3 = 1} with preconditioned projected descent, restarted from
several seeds because the feasible set is nonconvex.  The pure q-power
variant of the same minimisation (valid for any q >= 2) doubles as the
classical oracle and as the cross-check target: for p < q the two values
agree, for q < p the full value dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import functionals as fn
from .assembly import (
    MetricFactory,
    lowest_nonconstant_mode,
    make_preconditioner,
    metric_density,
    metric_mass_scale,
)
from .descent import ConvergenceError, DescentResult, SolverOptions, descend, smoothed_random_field
from .mesh import DiscreteField, element_gradients
from .problem import (
    HypothesisViolationError,
    ProblemSpec,
    bump_pair_seed,
    validate_problem,
)

__all__ = [
    "KktReport",
    "ThresholdResult",
    "ConsistencyReport",
    "solve_lambda1",
    "solve_lambda_1q",
    "check_consistency",
]


@dataclass(frozen=True)
class KktReport:
    """Multipliers of a constrained minimiser and its stationarity defect.

    ``multipliers`` is (lambda_star, mu_1, mu_2) for two-constraint solves
    or (lambda_star, mu) for single-constraint ones; the residual is the
    sup norm of the stationarity equation relative to its largest term.
    """

    multipliers: tuple[float, ...]
    stationarity_residual: float
    multiplier_scaling: str


@dataclass(frozen=True)
class ThresholdResult:
    """Converged threshold value with its minimiser and diagnostics.

    ``constraint_residuals`` holds the scaled cone residual and |T3 - 1| of
    the minimiser; ``history`` the accepted objective values of the winning
    restart; ``restart_fields`` every restart's converged minimiser (used
    downstream as probe evidence and as eigenpair seeds).
    """

    lambda1: float
    minimizer: DiscreteField
    iterations: int
    constraint_residuals: tuple[float, float]
    kkt: KktReport
    history: list[float]
    restart_values: tuple[float, ...]
    restart_fields: tuple[DiscreteField, ...]


@dataclass(frozen=True)
class ConsistencyReport:
    """Cross-checks between the full threshold and the pure q-power value."""

    lambda1: float
    lambda_1q: float
    p: float
    q: float
    rel_gap: float
    lambda1_matches_lambda_1q: bool | None
    lambda1_dominates_lambda_1q: bool | None
    probe_count: int
    probe_min_quotient: float
    probes_above_threshold: bool
    probe_max_limit_gap: float
    probe_ordering_ok: bool


def _retraction(spec: ProblemSpec):
    """Cone shift followed by mass normalisation, iterated until the
    cross-talk between the two constraints is below 1e-13 (at most twice;
    the rescale leaves the cone invariant, so one pass normally suffices)."""

    def retract(coeffs: np.ndarray) -> np.ndarray | None:
        current = coeffs
        try:
            for _ in range(2):
                shifted = fn.project_to_cone(spec, current)
                current = fn.normalize_mass(spec, shifted).coefficients
                g_scaled = abs(fn.cone_residual(spec, current)) / max(
                    fn.cone_scale(spec, current), 1e-300
                )
                if g_scaled <= 1e-13:
                    break
        except ValueError:
            return None
        return current

    return retract


def _quotient_direction(spec: ProblemSpec):
    """Metric-preconditioned quotient gradient, orthogonalised against the
    cone constraint gradient in the same metric.

    The metric is the stiffness weighted by the iterate's gradient density
    plus a mass term, so the descent map stays uniformly conditioned even
    where the energy's curvature degenerates (flat regions, q > 2)."""
    q = spec.q
    factory = MetricFactory(spec.mesh)

    def direction(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
        sg = fn.stiffness_gradient(spec, coeffs, q)
        mg = fn.mass_gradient_signed(spec, coeffs, q)
        t3 = fn._weighted_q_mass(spec, coeffs)
        quotient = fn.gradient_power_integral(spec.mesh, coeffs, q) / t3
        grad = q * (sg - quotient * mg) / t3
        cone_grad = (q - 1.0) * fn.mass_gradient_even(spec, coeffs, q)

        gnorm = np.linalg.norm(element_gradients(spec.mesh, coeffs), axis=1)
        weights = metric_density(gnorm, q)
        solve = factory.solver(weights, metric_mass_scale(spec.mesh, weights))
        z = solve(grad)
        zc = solve(cone_grad)
        denom = float(cone_grad @ zc)
        if denom > 0.0:
            z = z - (float(cone_grad @ z) / denom) * zc
        d = -z
        return d, float(grad @ d)

    return direction


def _threshold_seeds(spec: ProblemSpec, opts: SolverOptions, precond) -> list[np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, 0x5EED]))
    seeds: list[np.ndarray] = []
    try:
        seeds.append(bump_pair_seed(spec).coefficients.copy())
    except ValueError:
        pass
    seeds.append(smoothed_random_field(spec.mesh.n_nodes, rng, precond))
    seeds.append(lowest_nonconstant_mode(spec.mesh, rng))
    while len(seeds) < opts.restarts:
        seeds.append(smoothed_random_field(spec.mesh.n_nodes, rng, precond))
    return seeds[: max(opts.restarts, 1)]


def _threshold_kkt(spec: ProblemSpec, coeffs: np.ndarray) -> KktReport:
    """Multipliers for min T2 under {T3 = 1, g = 0}, normalised lambda_star=1.

    mu_1 comes from contracting the stationarity equation with the minimiser
    itself, mu_2 from contracting with the constant test function; with both
    eliminated the remaining vector measures the stationarity defect.
    """
    q = spec.q
    sg = fn.stiffness_gradient(spec, coeffs, q)
    ms = fn.mass_gradient_signed(spec, coeffs, q)
    me = fn.mass_gradient_even(spec, coeffs, q)
    ones = np.ones_like(coeffs)

    _, _, t3 = fn.t_values(spec, coeffs)
    mu1 = -float(sg @ coeffs) / t3
    me_mass = float(me @ ones)
    if me_mass != 0.0:
        mu2 = -(q * float(sg @ ones) + mu1 * q * float(ms @ ones)) / (
            (q - 1.0) * me_mass
        )
    else:
        mu2 = 0.0

    stationarity = q * sg + mu1 * q * ms + mu2 * (q - 1.0) * me
    scale = max(
        q * float(np.abs(sg).max(initial=0.0)),
        abs(mu1) * q * float(np.abs(ms).max(initial=0.0)),
        abs(mu2) * (q - 1.0) * float(np.abs(me).max(initial=0.0)),
    )
    residual = float(np.abs(stationarity).max(initial=0.0))
    rel = residual / scale if scale > 0.0 else 0.0
    return KktReport(
        multipliers=(1.0, mu1, mu2),
        stationarity_residual=rel,
        multiplier_scaling="lambda_star=1",
    )


def _minimize_quotient(spec: ProblemSpec, opts: SolverOptions) -> ThresholdResult:
    precond = make_preconditioner(spec.mesh)
    retract = _retraction(spec)
    direction = _quotient_direction(spec)

    def value(coeffs: np.ndarray) -> float:
        return fn.rayleigh_q(spec, coeffs)

    results: list[DescentResult] = []
    for seed in _threshold_seeds(spec, opts, precond):
        results.append(descend(seed, value, direction, retract, opts))

    if not any(r.converged for r in results):
        raise ConvergenceError(
            f"threshold minimisation did not converge within {opts.max_iters} "
            "iterations on any restart"
        )
    converged = [r for r in results if r.converged]
    best = min(converged, key=lambda r: r.history[-1])

    coeffs = best.coefficients
    value_best = fn.rayleigh_q(spec, coeffs)
    g_scaled = abs(fn.cone_residual(spec, coeffs)) / max(
        fn.cone_scale(spec, coeffs), 1e-300
    )
    _, _, t3 = fn.t_values(spec, coeffs)

    return ThresholdResult(
        lambda1=value_best,
        minimizer=DiscreteField(spec.mesh, coeffs),
        iterations=sum(r.iterations for r in results),
        constraint_residuals=(g_scaled, abs(t3 - 1.0)),
        kkt=_threshold_kkt(spec, coeffs),
        history=best.history,
        restart_values=tuple(r.history[-1] for r in converged),
        restart_fields=tuple(
            DiscreteField(spec.mesh, r.coefficients) for r in converged
        ),
    )


def solve_lambda_1q(spec: ProblemSpec, opts: SolverOptions | None = None) -> ThresholdResult:
    """Minimum of the q-power quotient over the cone (pure q-Laplacian value).

    Valid for any q >= 2; the exponent p plays no role on this path.  The
    result's ``lambda1`` field holds the computed value.
    """
    opts = opts or SolverOptions()
    report = validate_problem(spec, q_laplacian_path=True)
    if not report.ok:
        raise HypothesisViolationError(report)
    return _minimize_quotient(spec, opts)


def solve_lambda1(spec: ProblemSpec, opts: SolverOptions | None = None) -> ThresholdResult:
    """Spectral threshold of the full problem (requires the full hypotheses).

    The minimised quotient does not involve p, so in the discrete space the
    value coincides with the pure q-power minimum; the two entry points
    differ in their validation contract and downstream role.
    """
    opts = opts or SolverOptions()
    report = validate_problem(spec)
    if not report.ok:
        raise HypothesisViolationError(report)
    return _minimize_quotient(spec, opts)


def _random_cone_probe(
    spec: ProblemSpec, rng: np.random.Generator, precond
) -> np.ndarray | None:
    raw = smoothed_random_field(spec.mesh.n_nodes, rng, precond)
    try:
        projected = fn.project_to_cone(spec, raw).coefficients
    except ValueError:
        return None
    if not np.any(projected != 0.0):
        return None
    return projected


def check_consistency(
    spec: ProblemSpec,
    result: ThresholdResult,
    samples: int = 50,
    opts: SolverOptions | None = None,
) -> ConsistencyReport:
    """Cross-checks of a computed threshold against the q-power value.

    Probes ``samples`` random cone fields: the two-exponent quotient must
    dominate the q-power quotient pointwise, approach it under the
    documented rescaling (large for p < q, small for q < p), and never dip
    below the threshold.  Also compares the threshold with the q-power
    minimum: equality within 2 percent for p < q, dominance for q < p.
    """
    opts = opts or SolverOptions()
    result_q = solve_lambda_1q(spec, opts)
    lam1 = result.lambda1
    lam1q = result_q.lambda1
    rel_gap = abs(lam1 - lam1q) / lam1q if lam1q > 0 else math.inf

    p_below = spec.p < spec.q
    matches = rel_gap <= 0.02 if p_below else None
    dominates = None if p_below else lam1 >= lam1q - 1e-6 * max(lam1q, 1.0)

    t = 1e3 if p_below else 1e-3
    precond = make_preconditioner(spec.mesh)
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, 0xC0C5]))
    checked = 0
    min_quotient = math.inf
    max_limit_gap = 0.0
    ordering_ok = True
    above = True
    attempts = 0
    while checked < samples and attempts < 10 * samples:
        attempts += 1
        probe = _random_cone_probe(spec, rng, precond)
        if probe is None:
            continue
        rq = fn.rayleigh_q(spec, probe)
        if not math.isfinite(rq):
            continue
        rpq = fn.rayleigh_pq(spec, probe)
        rpq_scaled = fn.rayleigh_pq(spec, t * probe)
        checked += 1
        min_quotient = min(min_quotient, rpq_scaled)
        max_limit_gap = max(max_limit_gap, abs(rpq_scaled - rq) / rq)
        if rpq < rq:
            ordering_ok = False
        if rpq_scaled < lam1 - 1e-6 * max(lam1, 1.0):
            above = False

    return ConsistencyReport(
        lambda1=lam1,
        lambda_1q=lam1q,
        p=spec.p,
        q=spec.q,
        rel_gap=rel_gap,
        lambda1_matches_lambda_1q=matches,
        lambda1_dominates_lambda_1q=dominates,
        probe_count=checked,
        probe_min_quotient=min_quotient,
        probes_above_threshold=above,
        probe_max_limit_gap=max_limit_gap,
        probe_ordering_ok=ordering_ok,
    )
