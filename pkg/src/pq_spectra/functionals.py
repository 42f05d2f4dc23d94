"""Energies, constraints, quotients and first variations.

For a field u on a problem with exponents p, q and weights a, b:

    T1(u) = integral of |grad u|^p over the domain
    T2(u) = integral of |grad u|^q
    T3(u) = integral of a |u|^q  +  boundary integral of b |u|^q
    g(u)  = integral of a |u|^(q-2) u  +  boundary integral of b |u|^(q-2) u
    J(lam, u) = T1/p + T2/q - (lam/q) T3

The admissible cone is {g = 0}; for a fixed lam the scaling manifold is
{T1 + T2 - lam T3 = 0}, on which J reduces to (q-p)/(pq) T1.  The weak-form
residual of an eigenpair candidate tests J's first variation against every
nodal hat.

For p < 2 the gradient density |grad u|^(p-2) grad u is singular where the
gradient vanishes; first variations use the regularisation
(|g|^2 + eps^2)^((p-2)/2) g with eps = 1e-10 times the largest element
gradient magnitude, extended by zero on zero-gradient elements.  Energy
values always use exact powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import (
    DiscreteField,
    boundary_power_integral,
    element_gradients,
    gradient_power_integral,
    volume_power_integral,
)
from .problem import ProblemSpec

__all__ = [
    "FunctionalValues",
    "ScalingWitnessError",
    "GRAD_REG_SCALE",
    "t_values",
    "cone_residual",
    "cone_scale",
    "energy_j_lambda",
    "functional_values",
    "rayleigh_q",
    "rayleigh_pq",
    "ab_norm",
    "nehari_residual",
    "nehari_scale",
    "project_to_cone",
    "normalize_mass",
    "stiffness_gradient",
    "mass_gradient_signed",
    "mass_gradient_even",
    "weak_residual",
    "weak_residual_parts",
    "relative_weak_residual",
]

# relative regularisation scale for the singular gradient density (p < 2)
GRAD_REG_SCALE = 1e-10


class ScalingWitnessError(ValueError):
    """The scaling-root denominator is nonpositive: the given field does not
    witness that lam exceeds the spectral threshold."""


@dataclass(frozen=True)
class FunctionalValues:
    """All functional values of one field at one lam, evaluated consistently."""

    T1: float
    T2: float
    T3: float
    g: float
    J_lambda: float
    ab_norm: float


def _coeffs(spec: ProblemSpec, u) -> np.ndarray:
    if isinstance(u, DiscreteField):
        if u.mesh is not spec.mesh:
            raise ValueError("field lives on a different mesh than the problem")
        return u.coefficients
    arr = np.asarray(u, dtype=float)
    if arr.shape != (spec.mesh.n_nodes,):
        raise ValueError(
            f"coefficient vector has shape {arr.shape}, expected "
            f"({spec.mesh.n_nodes},)"
        )
    return arr


def _require_nonzero(coeffs: np.ndarray, op: str) -> None:
    if not np.any(coeffs != 0.0):
        raise ValueError(f"{op} is undefined on the zero field")


def t_values(spec: ProblemSpec, u) -> tuple[float, float, float]:
    """(T1, T2, T3) of a field."""
    c = _coeffs(spec, u)
    t1 = gradient_power_integral(spec.mesh, c, spec.p)
    t2 = gradient_power_integral(spec.mesh, c, spec.q)
    return t1, t2, _weighted_q_mass(spec, c)


def _weighted_q_mass(spec: ProblemSpec, c: np.ndarray) -> float:
    """T3 alone; avoids the two gradient integrals of :func:`t_values`."""
    return volume_power_integral(
        spec.mesh, c, spec.weight_a, spec.q
    ) + boundary_power_integral(spec.mesh, c, spec.weight_b, spec.q)


def cone_residual(spec: ProblemSpec, u) -> float:
    """g(u); the field belongs to the admissible cone iff this vanishes."""
    c = _coeffs(spec, u)
    return volume_power_integral(
        spec.mesh, c, spec.weight_a, spec.q, signed=True
    ) + boundary_power_integral(spec.mesh, c, spec.weight_b, spec.q, signed=True)


def cone_scale(spec: ProblemSpec, u) -> float:
    """Natural magnitude of g(u): the unsigned weighted (q-1)-power mass."""
    c = _coeffs(spec, u)
    return volume_power_integral(
        spec.mesh, np.abs(c), spec.weight_a, spec.q - 1.0
    ) + boundary_power_integral(spec.mesh, np.abs(c), spec.weight_b, spec.q - 1.0)


def energy_j_lambda(spec: ProblemSpec, lam: float, u) -> float:
    """J(lam, u) = T1/p + T2/q - (lam/q) T3."""
    t1, t2, t3 = t_values(spec, u)
    return t1 / spec.p + t2 / spec.q - (lam / spec.q) * t3


def functional_values(spec: ProblemSpec, lam: float, u) -> FunctionalValues:
    t1, t2, t3 = t_values(spec, u)
    return FunctionalValues(
        T1=t1,
        T2=t2,
        T3=t3,
        g=cone_residual(spec, u),
        J_lambda=t1 / spec.p + t2 / spec.q - (lam / spec.q) * t3,
        ab_norm=t1 ** (1.0 / spec.p) + t3 ** (1.0 / spec.q),
    )


def rayleigh_q(spec: ProblemSpec, u) -> float:
    """T2/T3, the q-homogeneous quotient; +inf when the mass T3 vanishes."""
    c = _coeffs(spec, u)
    _require_nonzero(c, "rayleigh_q")
    t2 = gradient_power_integral(spec.mesh, c, spec.q)
    t3 = _weighted_q_mass(spec, c)
    if t3 == 0.0:
        return math.inf
    return t2 / t3


def rayleigh_pq(spec: ProblemSpec, u) -> float:
    """(T2/q + T1/p) / (T3/q); +inf when the mass T3 vanishes."""
    c = _coeffs(spec, u)
    _require_nonzero(c, "rayleigh_pq")
    t1, t2, t3 = t_values(spec, c)
    if t3 == 0.0:
        return math.inf
    return (t2 / spec.q + t1 / spec.p) / (t3 / spec.q)


def ab_norm(spec: ProblemSpec, u) -> float:
    """T1^(1/p) + T3^(1/q); positive-definite on the discrete space."""
    t1, _, t3 = t_values(spec, u)
    return t1 ** (1.0 / spec.p) + t3 ** (1.0 / spec.q)


def nehari_residual(spec: ProblemSpec, lam: float, u) -> float:
    """T1 + T2 - lam T3; zero on the scaling manifold for lam."""
    c = _coeffs(spec, u)
    _require_nonzero(c, "nehari_residual")
    t1, t2, t3 = t_values(spec, c)
    return t1 + t2 - lam * t3


def nehari_scale(spec: ProblemSpec, lam: float, v) -> tuple[float, DiscreteField]:
    """Scale t > 0 with t*v on the scaling manifold, and the scaled field.

    Requires p < q and a positive denominator lam*T3 - T2, i.e. the quotient
    of v must lie strictly below lam; otherwise :class:`ScalingWitnessError`
    is raised.
    """
    if not spec.p < spec.q:
        raise ValueError("the scaling formula applies to p < q")
    c = _coeffs(spec, v)
    _require_nonzero(c, "nehari_scale")
    t1, t2, t3 = t_values(spec, c)
    denom = lam * t3 - t2
    if denom <= 0.0:
        raise ScalingWitnessError(
            f"scaling denominator lam*T3 - T2 = {denom:.3e} <= 0; the field "
            "does not witness that lam exceeds the threshold"
        )
    if t1 <= 0.0:
        raise ValueError("constant fields admit no scaling onto the manifold")
    t = (t1 / denom) ** (1.0 / (spec.q - spec.p))
    return t, DiscreteField(spec.mesh, t * c)


def _cone_shift_samples(spec: ProblemSpec, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature samples (values, weights) of u against the active weights.

    With these, g(u - s) = sum of w * |v - s|^(q-2) (v - s) over the samples;
    precomputing them makes the root search for the cone shift cheap.
    """
    mesh = spec.mesh
    u_q = c[mesh.elements] @ mesh.volume_points.T
    a_q = spec.weight_a[mesh.elements] @ mesh.volume_points.T
    w_vol = (
        a_q * mesh.element_measures[:, None] * mesh.volume_weights[None, :]
    ).ravel()
    u_b = c[mesh.boundary_facets] @ mesh.facet_points.T
    b_b = (
        spec.weight_b[mesh.boundary_index[mesh.boundary_facets]]
        @ mesh.facet_points.T
    )
    w_bnd = (
        b_b * mesh.facet_measures[:, None] * mesh.facet_weights[None, :]
    ).ravel()
    values = np.concatenate([u_q.ravel(), u_b.ravel()])
    weights = np.concatenate([w_vol, w_bnd])
    active = weights != 0.0
    return values[active], weights[active]


def project_to_cone(spec: ProblemSpec, u) -> DiscreteField:
    """Constant shift u - s with g(u - s) = 0.

    g(u - s) is nonincreasing in s, strictly through the root whenever the
    weights carry mass, so the shift is unique.  Solved by bisection on
    [min(u)-1, max(u)+1] down to 1e-14 of the bracket, then two Newton
    polish steps.
    """
    if spec.q < 2.0:
        raise ValueError("cone projection requires q >= 2")
    c = _coeffs(spec, u).copy()
    values, weights = _cone_shift_samples(spec, c)
    qm2 = spec.q - 2.0

    def g_of(s: float) -> float:
        shifted = values - s
        return float(weights @ (np.abs(shifted) ** qm2 * shifted))

    lo = float(c.min()) - 1.0
    hi = float(c.max()) + 1.0
    if not (g_of(lo) > 0.0 and g_of(hi) < 0.0):
        raise ValueError(
            "cone projection root is not bracketed on [min(u)-1, max(u)+1]; "
            "the weights have no usable mass"
        )
    span = hi - lo
    a, b = lo, hi
    while b - a > 1e-14 * span:
        mid = 0.5 * (a + b)
        if g_of(mid) > 0.0:
            a = mid
        else:
            b = mid
    s = 0.5 * (a + b)

    for _ in range(2):
        slope = -(spec.q - 1.0) * float(weights @ np.abs(values - s) ** qm2)
        if slope == 0.0:
            break
        s -= g_of(s) / slope
    return DiscreteField(spec.mesh, c - s)


def normalize_mass(spec: ProblemSpec, u) -> DiscreteField:
    """Rescale so that T3 becomes one; requires T3 > 0."""
    c = _coeffs(spec, u)
    t3 = _weighted_q_mass(spec, c)
    if t3 <= 0.0:
        raise ValueError("cannot normalise a field with zero weighted mass T3")
    t = t3 ** (-1.0 / spec.q)
    return DiscreteField(spec.mesh, t * c)


# ---------------------------------------------------------------------------
# first variations (assembled against every nodal hat)


def _gradient_density(gnorm: np.ndarray, exponent: float) -> np.ndarray:
    """rho(|g|) = |g|^(r-2), regularised and zero-extended for r < 2."""
    if exponent >= 2.0:
        return gnorm ** (exponent - 2.0)
    gmax = gnorm.max(initial=0.0)
    if gmax == 0.0:
        return np.zeros_like(gnorm)
    eps2 = (GRAD_REG_SCALE * gmax) ** 2
    rho = (gnorm**2 + eps2) ** ((exponent - 2.0) / 2.0)
    rho[gnorm == 0.0] = 0.0
    return rho


def stiffness_gradient(spec: ProblemSpec, u, exponent: float) -> np.ndarray:
    """Vector of integrals rho(|grad u|) grad u . grad phi_i with
    rho(s) = s^(r-2); one entry per nodal hat phi_i."""
    mesh = spec.mesh
    c = _coeffs(spec, u)
    grads = element_gradients(mesh, c)
    gnorm = np.linalg.norm(grads, axis=1)
    rho = _gradient_density(gnorm, exponent)
    flux = (mesh.element_measures * rho)[:, None] * grads
    contrib = np.einsum("ed,ekd->ek", flux, mesh.grad_basis)
    return np.bincount(
        mesh.elements.ravel(), weights=contrib.ravel(), minlength=mesh.n_nodes
    )


def _mass_vector(
    spec: ProblemSpec, coeffs: np.ndarray, exponent: float, signed: bool
) -> np.ndarray:
    mesh = spec.mesh
    r = exponent

    u_q = coeffs[mesh.elements] @ mesh.volume_points.T
    a_q = spec.weight_a[mesh.elements] @ mesh.volume_points.T
    mag = np.abs(u_q) ** (r - 2.0)
    density = a_q * (mag * u_q if signed else mag)
    contrib = np.einsum(
        "eq,q,qk->ek", density, mesh.volume_weights, mesh.volume_points
    ) * mesh.element_measures[:, None]
    out = np.bincount(
        mesh.elements.ravel(), weights=contrib.ravel(), minlength=mesh.n_nodes
    )

    u_b = coeffs[mesh.boundary_facets] @ mesh.facet_points.T
    b_b = (
        spec.weight_b[mesh.boundary_index[mesh.boundary_facets]]
        @ mesh.facet_points.T
    )
    mag_b = np.abs(u_b) ** (r - 2.0)
    density_b = b_b * (mag_b * u_b if signed else mag_b)
    contrib_b = np.einsum(
        "fq,q,qk->fk", density_b, mesh.facet_weights, mesh.facet_points
    ) * mesh.facet_measures[:, None]
    out += np.bincount(
        mesh.boundary_facets.ravel(),
        weights=contrib_b.ravel(),
        minlength=mesh.n_nodes,
    )
    return out


def mass_gradient_signed(spec: ProblemSpec, u, exponent: float) -> np.ndarray:
    """Entries: integral a |u|^(r-2) u phi_i plus the boundary analogue."""
    return _mass_vector(spec, _coeffs(spec, u), exponent, signed=True)


def mass_gradient_even(spec: ProblemSpec, u, exponent: float) -> np.ndarray:
    """Entries: integral a |u|^(r-2) phi_i plus the boundary analogue."""
    return _mass_vector(spec, _coeffs(spec, u), exponent, signed=False)


def weak_residual_parts(
    spec: ProblemSpec, u
) -> tuple[np.ndarray, np.ndarray]:
    """(stiffness action, signed q-mass action); residual = stiff - lam*mass."""
    c = _coeffs(spec, u)
    stiff = stiffness_gradient(spec, c, spec.p) + stiffness_gradient(spec, c, spec.q)
    mass = mass_gradient_signed(spec, c, spec.q)
    return stiff, mass


def weak_residual(spec: ProblemSpec, lam: float, u) -> np.ndarray:
    """First variation of J(lam, .) tested against every nodal hat.

    A candidate is a discrete eigenpair for lam exactly when this vector
    vanishes.  For p < 2 the zero field is rejected since the gradient
    density is only defined away from it.
    """
    c = _coeffs(spec, u)
    if spec.p < 2.0:
        _require_nonzero(c, "weak_residual")
    stiff, mass = weak_residual_parts(spec, c)
    out = stiff - lam * mass
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(
            "NaN/Inf in the assembled weak residual (regularised gradient terms)"
        )
    return out


def relative_weak_residual(spec: ProblemSpec, lam: float, u) -> float:
    """Sup-norm of the weak residual relative to its composing terms.

    The scale is max(|stiffness action|, |lam| * |mass action|) in sup norm;
    a zero scale with a zero residual reports 0.
    """
    c = _coeffs(spec, u)
    stiff, mass = weak_residual_parts(spec, c)
    residual = stiff - lam * mass
    scale = max(
        float(np.abs(stiff).max(initial=0.0)),
        abs(lam) * float(np.abs(mass).max(initial=0.0)),
    )
    rnorm = float(np.abs(residual).max(initial=0.0))
    if scale == 0.0:
        return 0.0 if rnorm == 0.0 else math.inf
    return rnorm / scale
