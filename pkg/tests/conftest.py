import numpy as np
import pytest

import pq_spectra as pq


def make_interval_spec(
    n_elements=64, p=1.5, q=3.0, x0=0.0, x1=1.0, a_value=1.0, b_value=0.0
):
    mesh = pq.build_interval_mesh(n_elements, x0, x1)
    return pq.ProblemSpec(
        mesh=mesh,
        p=p,
        q=q,
        weight_a=np.full(mesh.n_nodes, float(a_value)),
        weight_b=np.full(mesh.boundary_nodes.size, float(b_value)),
    )


def make_square_spec(n=8, p=1.5, q=3.0, a_value=1.0, b_value=0.0):
    mesh = pq.build_rectangle_mesh(n, n, (0.0, 1.0, 0.0, 1.0))
    return pq.ProblemSpec(
        mesh=mesh,
        p=p,
        q=q,
        weight_a=np.full(mesh.n_nodes, float(a_value)),
        weight_b=np.full(mesh.boundary_nodes.size, float(b_value)),
    )


@pytest.fixture
def interval_spec():
    return make_interval_spec()


@pytest.fixture
def interval_spec_factory():
    return make_interval_spec


@pytest.fixture
def square_spec_factory():
    return make_square_spec
