"""Problem instances: exponents, weights, hypothesis checks, cone seeding.

A problem couples a mesh with exponents p, q and nonnegative weights a (on
the domain) and b (on the boundary).  The admissible cone consists of fields
whose weighted signed (q-1)-power mass vanishes; :func:`bump_pair_seed`
constructs a nonzero cone element from two disjoint nodal bumps scaled
against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import DiscreteField, Mesh, boundary_power_integral, volume_power_integral

__all__ = [
    "ProblemSpec",
    "ValidationReport",
    "HypothesisViolationError",
    "HYP_PQ",
    "HYP_AB",
    "HYP_OMEGA",
    "validate_problem",
    "bump_pair_seed",
    "weight_from_expression",
]

HYP_PQ = "H_pq"
HYP_AB = "H_ab"
HYP_OMEGA = "H_Omega"


class HypothesisViolationError(ValueError):
    """A solver was invoked on a problem violating its standing hypotheses."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(
            "problem hypotheses violated: " + ", ".join(report.violated_hypotheses)
        )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Exponents and weights of one eigenvalue problem instance.

    ``weight_a`` holds one value per mesh node; ``weight_b`` one value per
    boundary node in the order of ``mesh.boundary_nodes``.  Instances are
    immutable and shareable across threads.
    """

    mesh: Mesh
    p: float
    q: float
    weight_a: np.ndarray
    weight_b: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.weight_a, dtype=float)
        b = np.asarray(self.weight_b, dtype=float)
        if a.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"weight_a must have one value per node, got {a.shape}"
            )
        if b.shape != (self.mesh.boundary_nodes.size,):
            raise ValueError(
                f"weight_b must have one value per boundary node "
                f"({self.mesh.boundary_nodes.size}), got {b.shape}"
            )
        for arr, name in ((a, "weight_a"), (b, "weight_b")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or Inf")
        a = a.copy()
        b = b.copy()
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "weight_a", a)
        object.__setattr__(self, "weight_b", b)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violated_hypotheses: tuple[str, ...]
    mass_a: float
    mass_b: float


def validate_problem(spec: ProblemSpec, q_laplacian_path: bool = False) -> ValidationReport:
    """Check the standing hypotheses and report every violation.

    The full exponent hypothesis asks p in (1, inf), q in (2, inf), p != q.
    The pure q-Laplacian solver path only needs q >= 2 and ignores p; pass
    ``q_laplacian_path=True`` for that relaxation.  Weight violations are
    reported, never raised.
    """
    violated: list[str] = []

    if q_laplacian_path:
        if not (np.isfinite(spec.q) and spec.q >= 2.0):
            violated.append(HYP_PQ)
    else:
        p_ok = np.isfinite(spec.p) and spec.p > 1.0
        q_ok = np.isfinite(spec.q) and spec.q > 2.0
        if not (p_ok and q_ok and spec.p != spec.q):
            violated.append(HYP_PQ)

    ones = np.ones(spec.mesh.n_nodes)
    mass_a = volume_power_integral(spec.mesh, ones, spec.weight_a, 1.0)
    mass_b = boundary_power_integral(spec.mesh, ones, spec.weight_b, 1.0)
    if spec.weight_a.min(initial=0.0) < 0.0 or spec.weight_b.min(initial=0.0) < 0.0:
        violated.append(HYP_AB)
    elif not mass_a + mass_b > 0.0:
        violated.append(HYP_AB)

    if spec.mesh.dimension not in (1, 2) or not np.all(
        spec.mesh.element_measures > 0.0
    ):
        violated.append(HYP_OMEGA)

    return ValidationReport(
        ok=not violated,
        violated_hypotheses=tuple(violated),
        mass_a=mass_a,
        mass_b=mass_b,
    )


def _node_bump_masses(spec: ProblemSpec) -> np.ndarray:
    """Weighted (q-1)-power mass of every nodal hat, volume plus boundary."""
    mesh = spec.mesh
    r = spec.q - 1.0

    phi_pow = mesh.volume_points**r
    a_q = spec.weight_a[mesh.elements] @ mesh.volume_points.T
    contrib = np.einsum(
        "eq,q,qk->ek", a_q, mesh.volume_weights, phi_pow
    ) * mesh.element_measures[:, None]
    theta = np.bincount(
        mesh.elements.ravel(), weights=contrib.ravel(), minlength=mesh.n_nodes
    )

    phi_pow_b = mesh.facet_points**r
    b_q = (
        spec.weight_b[mesh.boundary_index[mesh.boundary_facets]]
        @ mesh.facet_points.T
    )
    contrib_b = np.einsum(
        "fq,q,qk->fk", b_q, mesh.facet_weights, phi_pow_b
    ) * mesh.facet_measures[:, None]
    theta += np.bincount(
        mesh.boundary_facets.ravel(),
        weights=contrib_b.ravel(),
        minlength=mesh.n_nodes,
    )
    return theta


def bump_pair_seed(spec: ProblemSpec) -> DiscreteField:
    """Nonzero cone element built from two disjoint nodal bumps.

    Two hat functions u1, u2 are placed at nodes where the active weight has
    positive mass and whose supports share no element; each is scaled by
    sigma_k = theta_k^(-1/(q-1)) with theta_k its weighted (q-1)-power mass,
    so the signed masses of sigma_1 u1 and -sigma_2 u2 cancel exactly.
    """
    mesh = spec.mesh
    theta = _node_bump_masses(spec)
    peak = theta.max()
    if peak <= 0.0:
        raise ValueError("weights carry no mass anywhere; cannot seed the cone")
    candidates = np.flatnonzero(theta > 1e-12 * peak)

    # nodes sharing an element with i (including i itself)
    first = int(candidates[np.argmax(theta[candidates])])
    adjacent = np.zeros(mesh.n_nodes, dtype=bool)
    mask = np.any(mesh.elements == first, axis=1)
    adjacent[np.unique(mesh.elements[mask])] = True

    free = candidates[~adjacent[candidates]]
    if free.size == 0:
        raise ValueError(
            "cannot find two disjoint bump supports with positive weight "
            "mass; the mesh is too coarse for this weight layout"
        )
    dist = np.linalg.norm(mesh.nodes[free] - mesh.nodes[first], axis=1)
    second = int(free[np.argmax(dist)])

    exponent = -1.0 / (spec.q - 1.0)
    coeffs = np.zeros(mesh.n_nodes)
    coeffs[first] = theta[first] ** exponent
    coeffs[second] = -(theta[second] ** exponent)
    return DiscreteField(mesh, coeffs)


def weight_from_expression(
    mesh: Mesh, kind: str, params: dict, target: str = "volume"
) -> np.ndarray:
    """Build a nonnegative nodal weight vector from a declarative spec.

    ``kind`` is one of ``constant`` ({value}), ``indicator`` ({box, value})
    with a closed axis-aligned box, or ``nodal_table`` ({values}).  The
    target selects domain nodes ("volume") or boundary nodes ("boundary").
    """
    if target == "volume":
        points = mesh.nodes
    elif target == "boundary":
        points = mesh.nodes[mesh.boundary_nodes]
    else:
        raise ValueError(f"unknown weight target {target!r}")
    n = points.shape[0]

    if kind == "constant":
        value = float(params["value"])
        if value < 0.0:
            raise ValueError(f"negative weight value {value} rejected")
        return np.full(n, value)

    if kind == "indicator":
        box = [float(v) for v in params["box"]]
        if len(box) != 2 * mesh.dimension:
            raise ValueError(
                f"indicator box needs {2 * mesh.dimension} entries, got {len(box)}"
            )
        value = float(params.get("value", 1.0))
        if value < 0.0:
            raise ValueError(f"negative weight value {value} rejected")
        inside = np.ones(n, dtype=bool)
        for axis in range(mesh.dimension):
            lo, hi = box[2 * axis], box[2 * axis + 1]
            inside &= (points[:, axis] >= lo) & (points[:, axis] <= hi)
        return np.where(inside, value, 0.0)

    if kind == "nodal_table":
        values = np.asarray(params["values"], dtype=float)
        if values.shape != (n,):
            raise ValueError(
                f"nodal_table needs {n} values for target {target!r}, "
                f"got {values.shape}"
            )
        if values.min(initial=0.0) < 0.0:
            raise ValueError("negative entries in nodal_table rejected")
        return values.copy()

    raise ValueError(f"unknown weight kind {kind!r}")
