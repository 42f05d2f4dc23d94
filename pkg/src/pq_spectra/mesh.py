"""P1 simplicial meshes with degree-5 quadrature on intervals and rectangles.

A mesh carries everything the functional layer integrates against: element
measures, per-element gradients of the nodal hat basis, a volume quadrature
rule and a facet rule for the boundary measure.  P1 gradients are constant
on each element, so powers of the gradient are integrated exactly; powers of
the field itself use the degree-5 rule (exact for polynomial integrands up
to that degree, approximate for fractional powers).

Meshes and fields are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh",
    "DiscreteField",
    "MeshMismatchError",
    "build_interval_mesh",
    "build_rectangle_mesh",
    "interpolate",
    "constant_field",
    "element_gradients",
    "volume_power_integral",
    "boundary_power_integral",
    "gradient_power_integral",
    "validate_mesh",
]


class MeshMismatchError(ValueError):
    """A field or weight vector does not belong to the mesh it is used with."""


# 3-point Gauss-Legendre rule on [0, 1]; exact through polynomial degree 5.
_GL3_T = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
_GL3_W = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])


def _triangle_rule() -> tuple[np.ndarray, np.ndarray]:
    """Seven-point degree-5 rule on the reference triangle.

    Returns barycentric points (7, 3) and weights (7,) summing to one.
    """
    s = np.sqrt(15.0)
    a = (6.0 - s) / 21.0
    b = (6.0 + s) / 21.0
    wa = (155.0 - s) / 1200.0
    wb = (155.0 + s) / 1200.0
    points = [[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]]
    weights = [9.0 / 40.0]
    for c, w in ((a, wa), (b, wb)):
        d = 1.0 - 2.0 * c
        points.extend([[d, c, c], [c, d, c], [c, c, d]])
        weights.extend([w, w, w])
    return np.array(points), np.array(weights)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh with precomputed quadrature data.

    Attributes
    ----------
    dimension : 1 or 2
    nodes : (n_nodes, dim) coordinates
    elements : (n_elements, dim + 1) node indices per simplex
    boundary_facets : (n_facets, dim) node indices per boundary facet
        (points in 1D, edges in 2D)
    facet_parents : (n_facets,) index of the element owning each facet
    boundary_nodes : sorted node indices lying on the boundary
    boundary_index : (n_nodes,) position of each node in ``boundary_nodes``,
        -1 for interior nodes
    element_measures, facet_measures : simplex lengths/areas; boundary
        points carry unit weight in 1D
    grad_basis : (n_elements, dim + 1, dim) gradient of each local hat
    volume_points, volume_weights : reference rule in barycentric
        coordinates, weights summing to one
    facet_points, facet_weights : same for boundary facets
    """

    dimension: int
    nodes: np.ndarray
    elements: np.ndarray
    boundary_facets: np.ndarray
    facet_parents: np.ndarray
    boundary_nodes: np.ndarray
    boundary_index: np.ndarray
    element_measures: np.ndarray
    facet_measures: np.ndarray
    grad_basis: np.ndarray
    volume_points: np.ndarray
    volume_weights: np.ndarray
    facet_points: np.ndarray
    facet_weights: np.ndarray
    total_measure: float
    boundary_measure: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_facets(self) -> int:
        return self.boundary_facets.shape[0]


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Nodal coefficient vector of a piecewise-linear field on a mesh."""

    mesh: Mesh
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"coefficient count {coeffs.shape} does not match the "
                f"{self.mesh.n_nodes} mesh nodes"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("field coefficients contain NaN or Inf")
        object.__setattr__(self, "coefficients", _freeze(coeffs.copy()))


def build_interval_mesh(n_elements: int, x0: float, x1: float) -> Mesh:
    """Uniform 1D mesh of [x0, x1] with n_elements cells.

    Boundary facets are the two endpoints, carrying unit point weights for
    the surface measure.
    """
    if int(n_elements) != n_elements or n_elements < 2:
        raise ValueError(f"n_elements must be an integer >= 2, got {n_elements}")
    n_elements = int(n_elements)
    if not x0 < x1:
        raise ValueError(f"degenerate interval: need x0 < x1, got [{x0}, {x1}]")

    xs = np.linspace(float(x0), float(x1), n_elements + 1)
    nodes = xs[:, None]
    elements = np.column_stack(
        [np.arange(n_elements), np.arange(1, n_elements + 1)]
    ).astype(np.int64)
    h = np.diff(xs)
    grad_basis = np.empty((n_elements, 2, 1))
    grad_basis[:, 0, 0] = -1.0 / h
    grad_basis[:, 1, 0] = 1.0 / h

    boundary_facets = np.array([[0], [n_elements]], dtype=np.int64)
    facet_parents = np.array([0, n_elements - 1], dtype=np.int64)
    facet_measures = np.array([1.0, 1.0])
    boundary_nodes = np.array([0, n_elements], dtype=np.int64)
    boundary_index = np.full(n_elements + 1, -1, dtype=np.int64)
    boundary_index[boundary_nodes] = np.arange(2)

    volume_points = np.column_stack([1.0 - _GL3_T, _GL3_T])
    facet_points = np.array([[1.0]])
    facet_weights = np.array([1.0])

    return Mesh(
        dimension=1,
        nodes=_freeze(nodes),
        elements=_freeze(elements),
        boundary_facets=_freeze(boundary_facets),
        facet_parents=_freeze(facet_parents),
        boundary_nodes=_freeze(boundary_nodes),
        boundary_index=_freeze(boundary_index),
        element_measures=_freeze(h),
        facet_measures=_freeze(facet_measures),
        grad_basis=_freeze(grad_basis),
        volume_points=_freeze(volume_points),
        volume_weights=_freeze(_GL3_W.copy()),
        facet_points=_freeze(facet_points),
        facet_weights=_freeze(facet_weights),
        total_measure=float(h.sum()),
        boundary_measure=2.0,
    )


def build_rectangle_mesh(
    nx: int, ny: int, bounds: tuple[float, float, float, float]
) -> Mesh:
    """Structured triangulation of an axis-aligned rectangle.

    Each of the nx-by-ny cells is split along its diagonal into two
    triangles; boundary facets are the edges on the four sides, each tagged
    with its parent triangle.
    """
    if int(nx) != nx or int(ny) != ny or nx < 2 or ny < 2:
        raise ValueError(f"nx and ny must be integers >= 2, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)
    x0, x1, y0, y1 = map(float, bounds)
    if not (x0 < x1 and y0 < y1):
        raise ValueError(f"degenerate bounds: {bounds}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xg, yg = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([xg.ravel(), yg.ravel()])

    def nid(i: int | np.ndarray, j: int | np.ndarray) -> np.ndarray:
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    n00 = nid(ii, jj)
    n10 = nid(ii + 1, jj)
    n01 = nid(ii, jj + 1)
    n11 = nid(ii + 1, jj + 1)
    # lower triangle (n00, n10, n11) then upper (n00, n11, n01); both ccw
    elements = np.empty((2 * nx * ny, 3), dtype=np.int64)
    elements[0::2] = np.column_stack([n00, n10, n11])
    elements[1::2] = np.column_stack([n00, n11, n01])

    def cell_tri(i: np.ndarray, j: np.ndarray, upper: bool) -> np.ndarray:
        return 2 * (j * nx + i) + (1 if upper else 0)

    facets = []
    parents = []
    i = np.arange(nx)
    j = np.arange(ny)
    # bottom (j = 0): edge (n00, n10) of the lower triangle
    facets.append(np.column_stack([nid(i, 0), nid(i + 1, 0)]))
    parents.append(cell_tri(i, np.zeros_like(i), upper=False))
    # top (j = ny): edge (n11, n01) of the upper triangle
    facets.append(np.column_stack([nid(i + 1, ny), nid(i, ny)]))
    parents.append(cell_tri(i, np.full_like(i, ny - 1), upper=True))
    # left (i = 0): edge (n01, n00) of the upper triangle
    facets.append(np.column_stack([nid(0, j + 1), nid(0, j)]))
    parents.append(cell_tri(np.zeros_like(j), j, upper=True))
    # right (i = nx): edge (n10, n11) of the lower triangle
    facets.append(np.column_stack([nid(nx, j), nid(nx, j + 1)]))
    parents.append(cell_tri(np.full_like(j, nx - 1), j, upper=False))
    boundary_facets = np.vstack(facets)
    facet_parents = np.concatenate(parents)

    p0 = nodes[elements[:, 0]]
    e1 = nodes[elements[:, 1]] - p0
    e2 = nodes[elements[:, 2]] - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        raise ValueError("triangulation produced a non-positively oriented element")
    measures = 0.5 * det

    # grad of reference hats mapped by inverse-transpose Jacobian
    inv_t = np.empty((elements.shape[0], 2, 2))
    inv_t[:, 0, 0] = e2[:, 1] / det
    inv_t[:, 0, 1] = -e1[:, 1] / det
    inv_t[:, 1, 0] = -e2[:, 0] / det
    inv_t[:, 1, 1] = e1[:, 0] / det
    ref_grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grad_basis = np.einsum("edr,kr->ekd", inv_t, ref_grads)

    fa = nodes[boundary_facets[:, 0]]
    fb = nodes[boundary_facets[:, 1]]
    facet_measures = np.linalg.norm(fb - fa, axis=1)

    boundary_nodes = np.unique(boundary_facets)
    boundary_index = np.full(nodes.shape[0], -1, dtype=np.int64)
    boundary_index[boundary_nodes] = np.arange(boundary_nodes.size)

    volume_points, volume_weights = _triangle_rule()
    facet_points = np.column_stack([1.0 - _GL3_T, _GL3_T])

    return Mesh(
        dimension=2,
        nodes=_freeze(nodes),
        elements=_freeze(elements),
        boundary_facets=_freeze(boundary_facets),
        facet_parents=_freeze(facet_parents),
        boundary_nodes=_freeze(boundary_nodes),
        boundary_index=_freeze(boundary_index),
        element_measures=_freeze(measures),
        facet_measures=_freeze(facet_measures),
        grad_basis=_freeze(grad_basis),
        volume_points=_freeze(volume_points),
        volume_weights=_freeze(volume_weights),
        facet_points=_freeze(facet_points),
        facet_weights=_freeze(_GL3_W.copy()),
        total_measure=float(measures.sum()),
        boundary_measure=float(facet_measures.sum()),
    )


def interpolate(mesh: Mesh, fn) -> DiscreteField:
    """Nodal interpolation of an analytic function onto the P1 space.

    ``fn`` receives the x coordinates (1D) or x, y coordinate arrays (2D).
    """
    if mesh.dimension == 1:
        values = fn(mesh.nodes[:, 0])
    else:
        values = fn(mesh.nodes[:, 0], mesh.nodes[:, 1])
    return DiscreteField(mesh, np.broadcast_to(values, (mesh.n_nodes,)))


def constant_field(mesh: Mesh, value: float) -> DiscreteField:
    return DiscreteField(mesh, np.full(mesh.n_nodes, float(value)))


def _coefficients_on(mesh: Mesh, field, size: int, what: str) -> np.ndarray:
    if isinstance(field, DiscreteField):
        if field.mesh is not mesh:
            raise MeshMismatchError(f"{what} lives on a different mesh")
        values = field.coefficients
    else:
        values = np.asarray(field, dtype=float)
    if values.shape != (size,):
        raise MeshMismatchError(
            f"{what} has {values.shape} entries, expected ({size},)"
        )
    return values


def element_gradients(mesh: Mesh, field) -> np.ndarray:
    """Per-element constant gradient, shape (n_elements, dim).

    Computed from coefficient differences so that constant fields give an
    exactly zero gradient.
    """
    coeffs = _coefficients_on(mesh, field, mesh.n_nodes, "field")
    local = coeffs[mesh.elements]
    diffs = local[:, 1:] - local[:, :1]
    return np.einsum("ek,ekd->ed", diffs, mesh.grad_basis[:, 1:, :])


def _signed_power(values: np.ndarray, exponent: float, signed: bool) -> np.ndarray:
    mag = np.abs(values)
    if signed:
        return mag ** (exponent - 2.0) * values
    return mag**exponent


def volume_power_integral(
    mesh: Mesh, field, weight, exponent: float, signed: bool = False
) -> float:
    """Integral of w * |u|^r over the domain, or w * |u|^(r-2) u when signed.

    The weight is a nodal vector (or field) interpolated alongside u; signed
    mode requires r >= 2 so the integrand stays continuous.
    """
    if signed and exponent < 2.0:
        raise ValueError(f"signed mode requires exponent >= 2, got {exponent}")
    if not signed and exponent < 1.0:
        raise ValueError(f"exponent must be >= 1, got {exponent}")
    coeffs = _coefficients_on(mesh, field, mesh.n_nodes, "field")
    wvals = _coefficients_on(mesh, weight, mesh.n_nodes, "weight")
    u_q = coeffs[mesh.elements] @ mesh.volume_points.T
    w_q = wvals[mesh.elements] @ mesh.volume_points.T
    integrand = w_q * _signed_power(u_q, exponent, signed)
    return float(
        np.einsum("e,eq,q->", mesh.element_measures, integrand, mesh.volume_weights)
    )


def boundary_power_integral(
    mesh: Mesh, field, weight, exponent: float, signed: bool = False
) -> float:
    """Surface-measure analogue of :func:`volume_power_integral`.

    The weight vector holds one value per boundary node, in the order of
    ``mesh.boundary_nodes``.
    """
    if signed and exponent < 2.0:
        raise ValueError(f"signed mode requires exponent >= 2, got {exponent}")
    if not signed and exponent < 1.0:
        raise ValueError(f"exponent must be >= 1, got {exponent}")
    coeffs = _coefficients_on(mesh, field, mesh.n_nodes, "field")
    bvals = _coefficients_on(
        mesh, weight, mesh.boundary_nodes.size, "boundary weight"
    )
    u_q = coeffs[mesh.boundary_facets] @ mesh.facet_points.T
    w_q = bvals[mesh.boundary_index[mesh.boundary_facets]] @ mesh.facet_points.T
    integrand = w_q * _signed_power(u_q, exponent, signed)
    return float(
        np.einsum("f,fq,q->", mesh.facet_measures, integrand, mesh.facet_weights)
    )


def gradient_power_integral(mesh: Mesh, field, exponent: float) -> float:
    """Integral of |grad u|^r; exact for P1 fields since gradients are
    element-wise constant."""
    if exponent <= 1.0:
        raise ValueError(f"gradient exponent must be > 1, got {exponent}")
    grads = element_gradients(mesh, field)
    gnorm = np.linalg.norm(grads, axis=1)
    return float(np.dot(mesh.element_measures, gnorm**exponent))


def validate_mesh(mesh: Mesh) -> dict:
    """Structural checks: positive measures, boundary coverage, conformity.

    Returns a report dict; raises nothing, so callers can assert on fields.
    """
    report: dict = {
        "total_measure": mesh.total_measure,
        "boundary_measure": mesh.boundary_measure,
        "min_element_measure": float(mesh.element_measures.min()),
        "positive_measures": bool(np.all(mesh.element_measures > 0)),
    }

    if mesh.dimension == 1:
        subfacets: Counter = Counter()
        for element in mesh.elements:
            subfacets[(int(element[0]),)] += 1
            subfacets[(int(element[1]),)] += 1
    else:
        subfacets = Counter()
        for element in mesh.elements:
            e = [int(v) for v in element]
            for a, b in ((e[0], e[1]), (e[1], e[2]), (e[2], e[0])):
                subfacets[tuple(sorted((a, b)))] += 1

    counts = set(subfacets.values())
    conforming = counts <= {1, 2}
    exterior = {f for f, c in subfacets.items() if c == 1}
    declared = {tuple(sorted(int(v) for v in f)) for f in mesh.boundary_facets}
    report["conforming"] = conforming
    report["boundary_matches_exterior"] = exterior == declared
    parents_ok = True
    for facet, parent in zip(mesh.boundary_facets, mesh.facet_parents):
        if not set(int(v) for v in facet) <= set(
            int(v) for v in mesh.elements[parent]
        ):
            parents_ok = False
            break
    report["facet_parents_ok"] = parents_ok
    report["ok"] = bool(
        report["positive_measures"]
        and conforming
        and report["boundary_matches_exterior"]
        and parents_ok
    )
    return report
