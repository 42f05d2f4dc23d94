"""Sparse P1 assembly: linear matrices, preconditioner, residual Jacobian.

The linear stiffness/mass pair serves two purposes: it defines the inner
product for preconditioned descent directions, and its lowest nonconstant
generalized mode provides a high-quality restart seed.  The Jacobian of the
nonlinear weak-form residual backs the Newton polish that finishes each
eigenpair solve.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh, element_gradients
from .problem import ProblemSpec

__all__ = [
    "linear_matrices",
    "make_preconditioner",
    "lowest_nonconstant_mode",
    "weak_jacobian",
]

_DENSE_EIG_LIMIT = 600

# Jacobian-only floor for the singular p < 2 density; looser than the
# residual regularisation to keep Newton steps well scaled near kinks.
_JAC_REG_SCALE = 1e-8


def linear_matrices(mesh: Mesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """P1 stiffness and consistent mass matrices (no weights)."""
    n_loc = mesh.dimension + 1
    rows = np.repeat(mesh.elements, n_loc, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, n_loc)).ravel()

    k_local = np.einsum("ekd,eld->ekl", mesh.grad_basis, mesh.grad_basis)
    k_local *= mesh.element_measures[:, None, None]

    m_ref = np.einsum(
        "qk,ql,q->kl", mesh.volume_points, mesh.volume_points, mesh.volume_weights
    )
    m_local = m_ref[None, :, :] * mesh.element_measures[:, None, None]

    n = mesh.n_nodes
    stiffness = sp.coo_matrix((k_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((m_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return stiffness, mass


def make_preconditioner(mesh: Mesh) -> Callable[[np.ndarray], np.ndarray]:
    """Factorised solve with stiffness + mass; defines the descent metric."""
    stiffness, mass = linear_matrices(mesh)
    solver = spla.factorized((stiffness + mass).tocsc())

    def solve(vector: np.ndarray) -> np.ndarray:
        return solver(vector)

    return solve


class MetricFactory:
    """Per-iterate SPD metrics: diffusivity-weighted stiffness plus mass.

    The energies behind the solves have gradient-power densities, so their
    curvature concentrates where the iterate's gradient is large and
    degenerates where it vanishes (for exponents above two).  Weighting the
    metric's stiffness by the current gradient density restores uniform
    conditioning of the descent map; the mass term fills the flat kernel.
    The sparsity pattern and local matrices are prebuilt once per mesh.
    """

    def __init__(self, mesh: Mesh):
        n_loc = mesh.dimension + 1
        self.n = mesh.n_nodes
        self.rows = np.repeat(mesh.elements, n_loc, axis=1).ravel()
        self.cols = np.tile(mesh.elements, (1, n_loc)).ravel()
        self.k_local = np.einsum(
            "ekd,eld->ekl", mesh.grad_basis, mesh.grad_basis
        ) * mesh.element_measures[:, None, None]
        m_ref = np.einsum(
            "qk,ql,q->kl", mesh.volume_points, mesh.volume_points, mesh.volume_weights
        )
        self.m_local = m_ref[None, :, :] * mesh.element_measures[:, None, None]

    def solver(
        self, element_weights: np.ndarray, mass_scale: float
    ) -> Callable[[np.ndarray], np.ndarray]:
        local = (
            element_weights[:, None, None] * self.k_local
            + mass_scale * self.m_local
        )
        matrix = sp.coo_matrix(
            (local.ravel(), (self.rows, self.cols)), shape=(self.n, self.n)
        ).tocsc()
        return spla.factorized(matrix)


def metric_density(gnorm: np.ndarray, exponent: float) -> np.ndarray:
    """Element diffusivity |g|^(r-2) for the descent metric.

    Below exponent two the density is regularised but not zero-extended:
    flat elements carry the (large) regularised stiffness, matching the
    energy's steep curvature there.
    """
    if exponent >= 2.0:
        return gnorm ** (exponent - 2.0)
    gmax = gnorm.max(initial=0.0)
    if gmax == 0.0:
        return np.zeros_like(gnorm)
    eps2 = (_JAC_REG_SCALE * gmax) ** 2
    return (gnorm**2 + eps2) ** ((exponent - 2.0) / 2.0)


def metric_mass_scale(mesh: Mesh, element_weights: np.ndarray) -> float:
    """Robust scalar putting the metric's mass term on the stiffness scale."""
    positive = element_weights[element_weights > 0.0]
    if positive.size == 0:
        return 1.0
    return max(float(np.median(positive)), 1e-8 * float(positive.max()))


def lowest_nonconstant_mode(mesh: Mesh, rng: np.random.Generator) -> np.ndarray:
    """First nonconstant generalized mode of the linear stiffness/mass pair."""
    stiffness, mass = linear_matrices(mesh)
    n = mesh.n_nodes
    if n <= _DENSE_EIG_LIMIT:
        _, vectors = scipy.linalg.eigh(stiffness.toarray(), mass.toarray())
        return np.ascontiguousarray(vectors[:, 1])
    v0 = rng.standard_normal(n)
    values, vectors = spla.eigsh(stiffness, k=2, M=mass, sigma=-1e-2, v0=v0)
    order = np.argsort(values)
    return np.ascontiguousarray(vectors[:, order[1]])


def _density_and_slope(
    gnorm: np.ndarray, exponent: float
) -> tuple[np.ndarray, np.ndarray]:
    """rho(|g|) and the dyadic coefficient d rho/ds / s for the Jacobian.

    For exponents below two the regularised density is kept on flat
    elements (no zero-extension): the energy's curvature is steep there and
    the stabilised stiffness keeps Newton steps from drifting along flats.
    """
    if exponent >= 2.0:
        nz = gnorm > 0.0
        rho = gnorm ** (exponent - 2.0)
        dyadic = np.zeros_like(gnorm)
        dyadic[nz] = (exponent - 2.0) * gnorm[nz] ** (exponent - 4.0)
        return rho, dyadic
    gmax = gnorm.max(initial=0.0)
    if gmax == 0.0:
        return np.zeros_like(gnorm), np.zeros_like(gnorm)
    eps2 = (_JAC_REG_SCALE * gmax) ** 2
    base = gnorm**2 + eps2
    rho = base ** ((exponent - 2.0) / 2.0)
    dyadic = (exponent - 2.0) * base ** ((exponent - 4.0) / 2.0)
    return rho, dyadic


def weak_jacobian(spec: ProblemSpec, lam: float, u) -> sp.csr_matrix:
    """Jacobian of the weak-form residual with respect to the nodal values.

    Symmetric: it is the second variation of the energy, with the p < 2
    gradient density stabilised by a Jacobian-only regularisation floor.
    """
    mesh = spec.mesh
    coeffs = (
        u.coefficients if hasattr(u, "coefficients") else np.asarray(u, dtype=float)
    )
    n = mesh.n_nodes
    n_loc = mesh.dimension + 1

    grads = element_gradients(mesh, coeffs)
    gnorm = np.linalg.norm(grads, axis=1)
    rho_p, dy_p = _density_and_slope(gnorm, spec.p)
    rho_q, dy_q = _density_and_slope(gnorm, spec.q)

    gb_dot_g = np.einsum("ekd,ed->ek", mesh.grad_basis, grads)
    iso = np.einsum("ekd,eld->ekl", mesh.grad_basis, mesh.grad_basis)
    local = (rho_p + rho_q)[:, None, None] * iso
    local += (dy_p + dy_q)[:, None, None] * np.einsum(
        "ek,el->ekl", gb_dot_g, gb_dot_g
    )
    local *= mesh.element_measures[:, None, None]

    rows = np.repeat(mesh.elements, n_loc, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, n_loc)).ravel()
    jac = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    # mass part: -lam (q-1) [a |u|^(q-2) phi_k phi_l + boundary analogue]
    factor = -lam * (spec.q - 1.0)
    u_q = coeffs[mesh.elements] @ mesh.volume_points.T
    a_q = spec.weight_a[mesh.elements] @ mesh.volume_points.T
    density = a_q * np.abs(u_q) ** (spec.q - 2.0)
    m_local = np.einsum(
        "eq,q,qk,ql->ekl",
        density,
        mesh.volume_weights,
        mesh.volume_points,
        mesh.volume_points,
    )
    m_local *= factor * mesh.element_measures[:, None, None]
    jac = jac + sp.coo_matrix((m_local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    u_b = coeffs[mesh.boundary_facets] @ mesh.facet_points.T
    b_b = (
        spec.weight_b[mesh.boundary_index[mesh.boundary_facets]]
        @ mesh.facet_points.T
    )
    density_b = b_b * np.abs(u_b) ** (spec.q - 2.0)
    mb_local = np.einsum(
        "fq,q,qk,ql->fkl",
        density_b,
        mesh.facet_weights,
        mesh.facet_points,
        mesh.facet_points,
    )
    mb_local *= factor * mesh.facet_measures[:, None, None]
    rows_b = np.repeat(mesh.boundary_facets, mesh.dimension, axis=1).ravel()
    cols_b = np.tile(mesh.boundary_facets, (1, mesh.dimension)).ravel()
    jac = jac + sp.coo_matrix(
        (mb_local.ravel(), (rows_b, cols_b)), shape=(n, n)
    ).tocsr()
    return jac
