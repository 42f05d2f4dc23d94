"""Eigenpair construction above the threshold, certificates below it.

For a given lam the solve is dispatched by the exponent order: for p < q
the energy J restricted to the scaling manifold reduces to a positive
multiple of T1 and is minimised there (descent with a cone-projection plus
manifold-rescale retraction); for 2 < q < p the energy is coercive on the
cone and minimised globally (descent with cone projection alone).  Either
way the converged minimiser is a critical point of the unrestricted energy,
which a damped Newton polish on the weak-form residual then sharpens to
near machine precision.  For lam in (0, threshold] no eigenpair exists; a
certificate records the probe evidence for that conclusion instead of a
bare solver failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import functionals as fn
from .assembly import (
    MetricFactory,
    make_preconditioner,
    metric_density,
    metric_mass_scale,
    weak_jacobian,
)
from .descent import ConvergenceError, SolverOptions, descend, smoothed_random_field
from .functionals import ScalingWitnessError
from .lambda1 import KktReport, ThresholdResult
from .mesh import DiscreteField, constant_field, element_gradients
from .problem import HypothesisViolationError, ProblemSpec, bump_pair_seed, validate_problem

__all__ = [
    "EigenPair",
    "NonexistenceCertificate",
    "KktCheckReport",
    "zero_eigenpair",
    "solve_nehari",
    "solve_coercive",
    "certify_nonexistence",
    "kkt_check",
]

_TINY = 1e-300


@dataclass(frozen=True)
class EigenPair:
    """A verified eigenpair: lam with its eigenfunction and diagnostics.

    ``weak_residual_norm`` and ``cone_residual`` are relative (sup norm over
    nodal tests, and |g| against the unsigned mass scale); the cone residual
    is only meaningful for lam > 0 since the constant eigenfunctions of the
    zero eigenvalue do not lie in the cone.  ``nehari_residual`` and
    ``m_lambda`` are populated on the p < q route only.
    """

    lam: float
    field: DiscreteField
    weak_residual_norm: float
    cone_residual: float
    nehari_residual: float | None
    values: fn.FunctionalValues
    m_lambda: float | None
    case_tag: str
    kkt: KktReport
    iterations: int


@dataclass(frozen=True)
class NonexistenceCertificate:
    """Probe evidence that no eigenpair exists at lam <= threshold.

    Every probed cone field keeps its quotient at or above the threshold,
    so no candidate can satisfy the eigenpair mass identity, whose right
    side T1/T3 is strictly positive for admissible nonconstant fields.
    ``boundary_case`` marks lam equal to the threshold itself, excluded by
    the strictness of that identity.
    """

    lam: float
    lambda1_ref: float
    margin: float
    probe_min_quotient: float
    probe_count: int
    boundary_case: bool


@dataclass(frozen=True)
class KktCheckReport:
    """Independent verification of an eigenpair candidate at a given lam."""

    weak_residual_norm: float
    cone_residual: float
    mass_identity_defect: float
    tol: float
    passed: bool


def kkt_check(
    spec: ProblemSpec, lam: float, candidate, opts: SolverOptions | None = None
) -> KktCheckReport:
    """Verify a candidate against every nodal test function.

    Reports the relative weak residual, the scaled cone residual and the
    mass identity defect |lam - T2/T3 - T1/T3| (relative); the pass flag
    requires the residual and defect below tol and, for lam > 0, cone
    membership at the constraint tolerance.
    """
    opts = opts or SolverOptions()
    coeffs = fn._coeffs(spec, candidate)
    if not np.any(coeffs != 0.0):
        raise ValueError("kkt_check rejects the zero candidate")

    stiff, mass = fn.weak_residual_parts(spec, coeffs)
    residual = stiff - lam * mass
    scale = max(
        float(np.abs(stiff).max(initial=0.0)),
        abs(lam) * float(np.abs(mass).max(initial=0.0)),
    )
    rnorm = float(np.abs(residual).max(initial=0.0))
    if scale == 0.0:
        rel = 0.0 if rnorm == 0.0 else math.inf
    else:
        rel = rnorm / scale

    g = fn.cone_residual(spec, coeffs)
    cone_rel = abs(g) / max(fn.cone_scale(spec, coeffs), _TINY)

    t1, t2, t3 = fn.t_values(spec, coeffs)
    if t3 > 0.0:
        identity_gap = abs(lam - t2 / t3 - t1 / t3)
        denom = max(abs(lam), t2 / t3 + t1 / t3)
        defect = identity_gap / denom if denom > 0.0 else 0.0
    else:
        defect = math.inf

    passed = (
        rel <= opts.tol
        and defect <= opts.tol
        and (lam <= 0.0 or cone_rel <= opts.constraint_tol)
    )
    return KktCheckReport(
        weak_residual_norm=rel,
        cone_residual=cone_rel,
        mass_identity_defect=defect,
        tol=opts.tol,
        passed=passed,
    )


def zero_eigenpair(spec: ProblemSpec) -> EigenPair:
    """The zero eigenvalue with the constant eigenfunction one.

    Constants annihilate both gradient terms exactly, and the mass terms
    carry the factor lam = 0, so the weak residual vanishes identically.
    """
    report = validate_problem(spec)
    if not report.ok:
        raise HypothesisViolationError(report)
    field = constant_field(spec.mesh, 1.0)
    rel = fn.relative_weak_residual(spec, 0.0, field.coefficients)
    values = fn.functional_values(spec, 0.0, field.coefficients)
    cone_rel = abs(values.g) / max(fn.cone_scale(spec, field.coefficients), _TINY)
    return EigenPair(
        lam=0.0,
        field=field,
        weak_residual_norm=rel,
        cone_residual=cone_rel,
        nehari_residual=None,
        values=values,
        m_lambda=None,
        case_tag="zero",
        kkt=KktReport((1.0,), rel, "lambda_star=1"),
        iterations=0,
    )


# ---------------------------------------------------------------------------
# polish: Newton on the weak residual, then exact constraint restoration


def _newton_polish(
    spec: ProblemSpec, lam: float, coeffs: np.ndarray, opts: SolverOptions
) -> tuple[np.ndarray, int]:
    """Damped Newton steps on the residual; accepts only improving steps."""
    current = coeffs
    rel = fn.relative_weak_residual(spec, lam, current)
    steps = 0
    for _ in range(opts.newton_steps):
        if rel <= 1e-13:
            break
        jac = weak_jacobian(spec, lam, current)
        # tiny diagonal floor keeps flat-region rows solvable; it perturbs
        # healthy steps at the 1e-10 relative level only
        floor = 1e-10 * max(float(np.abs(jac.diagonal()).max()), 1.0)
        jac = jac + floor * sp.identity(jac.shape[0], format="csr")
        try:
            delta = spla.spsolve(jac.tocsc(), -fn.weak_residual(spec, lam, current))
        except Exception:
            break
        if not np.all(np.isfinite(delta)):
            break
        improved = False
        scaled = delta
        for _ in range(8):
            trial = current + scaled
            if np.any(trial != 0.0):
                try:
                    trial_rel = fn.relative_weak_residual(spec, lam, trial)
                except FloatingPointError:
                    trial_rel = math.inf
                if trial_rel < rel:
                    current, rel = trial, trial_rel
                    improved = True
                    break
            scaled = 0.5 * scaled
        steps += 1
        if not improved:
            break
    return current, steps


def _flatten_dead_regions(
    spec: ProblemSpec, coeffs: np.ndarray
) -> np.ndarray | None:
    """Snap weight-free regions to their rim value, where that is exact.

    Where both weights vanish over a connected set of elements, the
    eigenfunction solves a pure flux-continuity problem whose discrete
    solution is constant for p < 2 (the gradient density is extended by
    zero on flat elements, so exactly flat regions satisfy their rows
    exactly, while residuals of nearly-flat ones carry a root-type kink
    that stalls Newton).  Returns a flattened candidate or None when there
    is nothing to flatten; the caller keeps it only if the residual drops.
    """
    mesh = spec.mesh
    a_q = spec.weight_a[mesh.elements] @ mesh.volume_points.T
    a_scale = max(float(spec.weight_a.max(initial=0.0)), 1.0)
    dead = a_q.max(axis=1) <= 1e-14 * a_scale
    if mesh.boundary_facets.size:
        b_f = spec.weight_b[mesh.boundary_index[mesh.boundary_facets]]
        b_scale = max(float(spec.weight_b.max(initial=0.0)), 1.0)
        live_facets = b_f.max(axis=1) > 1e-14 * b_scale
        dead[mesh.facet_parents[live_facets]] = False
    if not dead.any() or dead.all():
        return None

    from scipy.sparse.csgraph import connected_components

    dead_ids = np.flatnonzero(dead)
    n_loc = mesh.dimension + 1
    incidence = sp.coo_matrix(
        (
            np.ones(dead_ids.size * n_loc),
            (
                np.repeat(np.arange(dead_ids.size), n_loc),
                mesh.elements[dead_ids].ravel(),
            ),
        ),
        shape=(dead_ids.size, mesh.n_nodes),
    ).tocsr()
    adjacency = incidence @ incidence.T
    n_comp, labels = connected_components(adjacency, directed=False)

    live_nodes = np.zeros(mesh.n_nodes, dtype=bool)
    live_nodes[np.unique(mesh.elements[~dead])] = True

    candidate = coeffs.copy()
    changed = False
    for comp in range(n_comp):
        nodes = np.unique(mesh.elements[dead_ids[labels == comp]])
        rim = nodes[live_nodes[nodes]]
        interior = nodes[~live_nodes[nodes]]
        if rim.size == 0 or interior.size == 0:
            continue
        level = float(coeffs[rim].mean())
        if np.any(candidate[interior] != level):
            candidate[interior] = level
            changed = True
    return candidate if changed else None


def _restore_constraints(
    spec: ProblemSpec, lam: float, coeffs: np.ndarray
) -> np.ndarray:
    """Exact cone projection, then rescale onto the scaling manifold.

    Near a critical point the rescale factor is one up to the residual
    size, so this only zeroes the constraint defects without disturbing
    convergence; it makes the mass identity and the manifold energy
    identity hold to roundoff.
    """
    try:
        current = fn.project_to_cone(spec, coeffs).coefficients
    except ValueError:
        return coeffs
    t1, t2, t3 = fn.t_values(spec, current)
    denom = lam * t3 - t2
    if denom > 0.0 and t1 > 0.0 and spec.p != spec.q:
        t = (t1 / denom) ** (1.0 / (spec.q - spec.p))
        if math.isfinite(t) and t > 0.0:
            current = t * current
    return current


def _polish(
    spec: ProblemSpec, lam: float, coeffs: np.ndarray, opts: SolverOptions
) -> tuple[np.ndarray, float, int]:
    current = coeffs
    steps = 0
    rel = fn.relative_weak_residual(spec, lam, current)
    for _ in range(3):
        flattened = _flatten_dead_regions(spec, current)
        if flattened is not None:
            flat_rel = fn.relative_weak_residual(spec, lam, flattened)
            if flat_rel < rel:
                current, rel = flattened, flat_rel
        current, used = _newton_polish(spec, lam, current, opts)
        steps += used
        current = _restore_constraints(spec, lam, current)
        rel = fn.relative_weak_residual(spec, lam, current)
        if rel <= 0.1 * opts.tol:
            break
    return current, rel, steps


# ---------------------------------------------------------------------------
# KKT extraction for the two constrained formulations


def _eigen_kkt(
    spec: ProblemSpec, lam: float, coeffs: np.ndarray, two_constraints: bool
) -> KktReport:
    """Multipliers via the elimination chain: constants first, then the
    minimiser itself; both vanish at a true critical point."""
    q = spec.q
    residual = fn.weak_residual(spec, lam, coeffs)
    ones = np.ones_like(coeffs)
    cone_grad = (q - 1.0) * fn.mass_gradient_even(spec, coeffs, q)

    stiff, mass = fn.weak_residual_parts(spec, coeffs)
    scale = max(
        float(np.abs(stiff).max(initial=0.0)),
        abs(lam) * float(np.abs(mass).max(initial=0.0)),
        _TINY,
    )

    cg_mass = float(cone_grad @ ones)
    mu2 = -float(residual @ ones) / cg_mass if cg_mass != 0.0 else 0.0
    if two_constraints:
        sp_ = fn.stiffness_gradient(spec, coeffs, spec.p)
        sq_ = fn.stiffness_gradient(spec, coeffs, q)
        manifold_grad = spec.p * sp_ + q * sq_ - lam * q * mass
        mg_u = float(manifold_grad @ coeffs)
        mu1 = -float(residual @ coeffs) / mg_u if mg_u != 0.0 else 0.0
        stationarity = residual + mu1 * manifold_grad + mu2 * cone_grad
        multipliers = (1.0, mu1, mu2)
    else:
        stationarity = residual + mu2 * cone_grad
        multipliers = (1.0, mu2)

    return KktReport(
        multipliers=multipliers,
        stationarity_residual=float(np.abs(stationarity).max(initial=0.0)) / scale,
        multiplier_scaling="lambda_star=1",
    )


def _package(
    spec: ProblemSpec,
    lam: float,
    coeffs: np.ndarray,
    case_tag: str,
    iterations: int,
    m_lambda: float | None,
) -> EigenPair:
    values = fn.functional_values(spec, lam, coeffs)
    rel = fn.relative_weak_residual(spec, lam, coeffs)
    cone_rel = abs(values.g) / max(fn.cone_scale(spec, coeffs), _TINY)
    nehari = fn.nehari_residual(spec, lam, coeffs) if spec.p < spec.q else None
    # every accepted eigenpair must satisfy the mass identity
    # lam - T2/T3 = T1/T3 > 0, the discrete form of testing with itself
    defect = abs(lam - values.T2 / values.T3 - values.T1 / values.T3)
    if not defect <= 1e-8 * lam:
        raise ConvergenceError(
            f"accepted candidate violates the eigenpair mass identity "
            f"(relative defect {defect / lam:.3e})"
        )
    return EigenPair(
        lam=lam,
        field=DiscreteField(spec.mesh, coeffs),
        weak_residual_norm=rel,
        cone_residual=cone_rel,
        nehari_residual=nehari,
        values=values,
        m_lambda=m_lambda,
        case_tag=case_tag,
        kkt=_eigen_kkt(spec, lam, coeffs, two_constraints=case_tag == "nehari"),
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# the two eigenpair routes


def _validated(spec: ProblemSpec) -> None:
    report = validate_problem(spec)
    if not report.ok:
        raise HypothesisViolationError(report)


def _candidate_seeds(spec: ProblemSpec, threshold: ThresholdResult) -> list[np.ndarray]:
    seeds = [threshold.minimizer.coefficients]
    seeds.extend(f.coefficients for f in threshold.restart_fields)
    try:
        seeds.append(fn.project_to_cone(spec, bump_pair_seed(spec)).coefficients)
    except ValueError:
        pass
    return seeds


def solve_nehari(
    spec: ProblemSpec,
    lam: float,
    threshold: ThresholdResult,
    opts: SolverOptions | None = None,
) -> EigenPair:
    """Eigenpair for lam above the threshold when p < q.

    Minimises the restricted energy (q-p)/(pq) T1 over the intersection of
    the cone with the scaling manifold; seeds must carry a quotient below
    lam so the manifold rescale exists.  The converged minimum is the
    reported m_lambda.
    """
    opts = opts or SolverOptions()
    if not spec.p < spec.q:
        raise ValueError("the manifold route requires p < q; use solve_coercive")
    if lam <= 0.0:
        raise ValueError("lam must be positive; use zero_eigenpair for lam = 0")
    _validated(spec)

    admissible = []
    for seed in _candidate_seeds(spec, threshold):
        try:
            if fn.rayleigh_q(spec, seed) < lam:
                admissible.append(seed)
        except ValueError:
            continue
    if not admissible:
        raise ScalingWitnessError(
            "the scaling denominator is nonpositive for every seed; lam does "
            "not exceed the discrete threshold"
        )

    p, q = spec.p, spec.q
    factor = (q - p) / (p * q)
    factory = MetricFactory(spec.mesh)

    def retract(coeffs: np.ndarray) -> np.ndarray | None:
        try:
            on_cone = fn.project_to_cone(spec, coeffs)
            _, scaled = fn.nehari_scale(spec, lam, on_cone)
        except (ScalingWitnessError, ValueError):
            return None
        return scaled.coefficients

    def value(coeffs: np.ndarray) -> float:
        return factor * fn.gradient_power_integral(spec.mesh, coeffs, p)

    def direction(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
        sp_ = fn.stiffness_gradient(spec, coeffs, p)
        sq_ = fn.stiffness_gradient(spec, coeffs, q)
        mass = fn.mass_gradient_signed(spec, coeffs, q)
        grad = factor * p * sp_
        g1 = p * sp_ + q * sq_ - lam * q * mass
        g2 = (q - 1.0) * fn.mass_gradient_even(spec, coeffs, q)

        gnorm = np.linalg.norm(element_gradients(spec.mesh, coeffs), axis=1)
        weights = metric_density(gnorm, p) + metric_density(gnorm, q)
        solve = factory.solver(weights, metric_mass_scale(spec.mesh, weights))
        z = solve(grad)
        z1 = solve(g1)
        z2 = solve(g2)
        gram = np.array(
            [[g1 @ z1, g1 @ z2], [g2 @ z1, g2 @ z2]], dtype=float
        )
        rhs = np.array([g1 @ z, g2 @ z], dtype=float)
        try:
            beta = np.linalg.solve(gram, rhs)
            z = z - beta[0] * z1 - beta[1] * z2
        except np.linalg.LinAlgError:
            pass
        d = -z
        return d, float(grad @ d)

    def stop(coeffs: np.ndarray) -> bool:
        return fn.relative_weak_residual(spec, lam, coeffs) <= opts.tol

    candidates: list[tuple[float, np.ndarray, int]] = []
    for seed in admissible[: max(opts.restarts, 1)]:
        result = descend(seed, value, direction, retract, opts, stop_fn=stop)
        coeffs, rel, newton_steps = _polish(spec, lam, result.coefficients, opts)
        if rel <= opts.tol:
            energy = fn.energy_j_lambda(spec, lam, coeffs)
            candidates.append((energy, coeffs, result.iterations + newton_steps))

    if not candidates:
        raise ConvergenceError(
            f"no manifold minimiser reached the residual tolerance {opts.tol}"
        )
    energy, coeffs, iterations = min(candidates, key=lambda item: item[0])
    return _package(spec, lam, coeffs, "nehari", iterations, m_lambda=energy)


def solve_coercive(
    spec: ProblemSpec,
    lam: float,
    threshold: ThresholdResult,
    opts: SolverOptions | None = None,
) -> EigenPair:
    """Eigenpair for lam above the threshold when 2 < q < p.

    The energy is coercive on the cone, so it is minimised globally there;
    seeds are threshold minimisers rescaled to their optimal amplitude,
    which makes the seed energy strictly negative whenever lam exceeds the
    threshold.  A run where every restart ends at nonnegative energy is
    rejected as evidence that lam does not exceed the threshold.
    """
    opts = opts or SolverOptions()
    if not (2.0 < spec.q < spec.p):
        raise ValueError("the coercive route requires 2 < q < p; use solve_nehari")
    if lam <= 0.0:
        raise ValueError("lam must be positive; use zero_eigenpair for lam = 0")
    _validated(spec)

    p, q = spec.p, spec.q
    precond = make_preconditioner(spec.mesh)

    seeds: list[np.ndarray] = []
    for base in _candidate_seeds(spec, threshold):
        t1, t2, t3 = fn.t_values(spec, base)
        alpha = t1 / p
        beta = (lam * t3 - t2) / q
        if beta <= 0.0 or alpha <= 0.0:
            continue
        t_opt = (q * beta / (p * alpha)) ** (1.0 / (p - q))
        seeds.append(t_opt * base)
    if not seeds:
        # at its optimal amplitude every candidate still has nonnegative
        # energy, which is exactly the signature of lam at or below the
        # discrete threshold
        raise ConvergenceError(
            "every restart seed has nonnegative energy at its optimal "
            "amplitude; lam is suspect of not exceeding the threshold"
        )
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, 0xC0E5]))
    while len(seeds) < max(opts.restarts, 1):
        seeds.append(smoothed_random_field(spec.mesh.n_nodes, rng, precond))

    factory = MetricFactory(spec.mesh)

    def retract(coeffs: np.ndarray) -> np.ndarray | None:
        try:
            return fn.project_to_cone(spec, coeffs).coefficients
        except ValueError:
            return None

    def value(coeffs: np.ndarray) -> float:
        return fn.energy_j_lambda(spec, lam, coeffs)

    def direction(coeffs: np.ndarray) -> tuple[np.ndarray, float]:
        grad = fn.weak_residual(spec, lam, coeffs)
        cone_grad = (q - 1.0) * fn.mass_gradient_even(spec, coeffs, q)
        gnorm = np.linalg.norm(element_gradients(spec.mesh, coeffs), axis=1)
        weights = metric_density(gnorm, p) + metric_density(gnorm, q)
        solve = factory.solver(weights, metric_mass_scale(spec.mesh, weights))
        z = solve(grad)
        zc = solve(cone_grad)
        denom = float(cone_grad @ zc)
        if denom > 0.0:
            z = z - (float(cone_grad @ z) / denom) * zc
        d = -z
        return d, float(grad @ d)

    def stop(coeffs: np.ndarray) -> bool:
        return fn.relative_weak_residual(spec, lam, coeffs) <= opts.tol

    candidates: list[tuple[float, np.ndarray, int]] = []
    for seed in seeds[: max(opts.restarts, 1)]:
        floor = 1e-8 * float(np.abs(seed).max())

        def collapsed(coeffs: np.ndarray) -> bool:
            return float(np.abs(coeffs).max()) < floor

        result = descend(
            seed, value, direction, retract, opts, stop_fn=stop, abort_fn=collapsed
        )
        if result.reason == "aborted":
            continue
        coeffs, rel, newton_steps = _polish(spec, lam, result.coefficients, opts)
        if rel <= opts.tol:
            energy = fn.energy_j_lambda(spec, lam, coeffs)
            candidates.append((energy, coeffs, result.iterations + newton_steps))

    if not candidates:
        raise ConvergenceError(
            f"no cone minimiser reached the residual tolerance {opts.tol}"
        )
    energy, coeffs, iterations = min(candidates, key=lambda item: item[0])
    if energy >= 0.0:
        raise ConvergenceError(
            "every restart terminated at nonnegative energy; lam is suspect "
            "of not exceeding the threshold"
        )
    return _package(spec, lam, coeffs, "coercive", iterations, m_lambda=None)


def certify_nonexistence(
    spec: ProblemSpec,
    lam: float,
    threshold: ThresholdResult,
    opts: SolverOptions | None = None,
) -> NonexistenceCertificate:
    """Certificate that no eigenpair exists for lam in (0, threshold].

    Gathers quotient evidence over random cone probes plus every converged
    restart of the threshold solve: their minimum stays at the threshold,
    so the strict eigenpair mass identity is unsatisfiable at or below it.
    """
    opts = opts or SolverOptions()
    lam1 = threshold.lambda1
    if lam <= 0.0:
        raise ValueError("certificates cover 0 < lam <= threshold only")
    if lam > lam1 * (1.0 + 1e-12):
        raise ValueError(
            f"lam = {lam} exceeds the certified interval (0, {lam1}]"
        )

    quotients = [fn.rayleigh_q(spec, threshold.minimizer.coefficients)]
    quotients.extend(
        fn.rayleigh_q(spec, f.coefficients) for f in threshold.restart_fields
    )

    precond = make_preconditioner(spec.mesh)
    rng = np.random.default_rng(np.random.SeedSequence([opts.seed, 0xCE27]))
    drawn = 0
    attempts = 0
    while drawn < opts.probes and attempts < 10 * opts.probes:
        attempts += 1
        raw = smoothed_random_field(spec.mesh.n_nodes, rng, precond)
        try:
            probe = fn.project_to_cone(spec, raw).coefficients
            quotient = fn.rayleigh_q(spec, probe)
        except ValueError:
            continue
        quotients.append(quotient)
        drawn += 1

    finite = [qv for qv in quotients if math.isfinite(qv)]
    min_quotient = min(finite) if finite else math.inf
    guard = 1e-6 * max(lam1, 1.0)
    if min_quotient < lam1 - guard:
        raise ConvergenceError(
            "a probe quotient dips below the computed threshold; the "
            "threshold solve looks unconverged, refusing to certify"
        )

    boundary = abs(lam - lam1) <= 1e-12 * max(lam1, 1.0)
    return NonexistenceCertificate(
        lam=lam,
        lambda1_ref=lam1,
        margin=max(lam1 - lam, 0.0),
        probe_min_quotient=min_quotient,
        probe_count=len(quotients),
        boundary_case=boundary,
    )
