import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

import pq_spectra as pq
from pq_spectra import functionals as fn
from pq_spectra.functionals import ScalingWitnessError
from conftest import make_interval_spec


def random_field(spec, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return scale * rng.standard_normal(spec.mesh.n_nodes)


class TestConeResidual:
    def test_zero_field(self, interval_spec):
        assert pq.cone_residual(interval_spec, np.zeros(65)) == 0.0

    def test_constant_equals_weight_mass(self, interval_spec):
        value = pq.cone_residual(interval_spec, np.ones(65))
        assert value == pytest.approx(1.0, rel=1e-12)

    def test_odd_symmetry(self):
        spec = make_interval_spec(n_elements=32, q=3.0)
        u = pq.interpolate(spec.mesh, lambda x: x - 0.5)
        assert abs(pq.cone_residual(spec, u)) <= 1e-14


class TestEnergy:
    def test_constant_field(self):
        spec = make_interval_spec(q=3.0)
        c = 2.0
        value = pq.energy_j_lambda(spec, 1.0, pq.constant_field(spec.mesh, c))
        assert value == pytest.approx(-(c**3) / 3.0, rel=1e-12)

    def test_zero_field(self, interval_spec):
        assert pq.energy_j_lambda(interval_spec, 3.0, np.zeros(65)) == 0.0

    def test_linear_field_lambda_zero(self):
        spec = make_interval_spec(p=1.5, q=3.0)
        u = pq.interpolate(spec.mesh, lambda x: x)
        value = pq.energy_j_lambda(spec, 0.0, u)
        assert value == pytest.approx(1.0 / 1.5 + 1.0 / 3.0, rel=1e-12)

    def test_functional_values_consistency(self, interval_spec):
        u = random_field(interval_spec, 3)
        lam = 2.5
        values = pq.functional_values(interval_spec, lam, u)
        p, q = interval_spec.p, interval_spec.q
        expected = values.T1 / p + values.T2 / q - lam / q * values.T3
        assert values.J_lambda == pytest.approx(expected, rel=1e-12)
        assert values.ab_norm == pytest.approx(
            values.T1 ** (1 / p) + values.T3 ** (1 / q), rel=1e-12
        )


class TestWeakResidual:
    def test_constant_is_zero_eigenfunction(self):
        spec = make_interval_spec(p=1.5, q=3.0)
        residual = pq.weak_residual(spec, 0.0, pq.constant_field(spec.mesh, 5.0))
        assert np.abs(residual).max() == 0.0

    def test_sum_against_constant_test_function(self):
        # testing with the constant function collapses the residual to
        # -lam * g(u), which vanishes on the cone
        spec = make_interval_spec(n_elements=32)
        u = pq.project_to_cone(spec, random_field(spec, 5))
        residual = pq.weak_residual(spec, 4.0, u)
        stiff, _ = fn.weak_residual_parts(spec, u.coefficients)
        scale = np.abs(stiff).max()
        assert abs(residual.sum()) <= 1e-11 * scale

    def test_linear_field_matches_difference_quotient(self):
        # independent oracle: central differences of the energy
        spec = make_interval_spec(n_elements=16, p=1.5, q=3.0)
        u = pq.interpolate(spec.mesh, lambda x: x).coefficients
        residual = pq.weak_residual(spec, 0.0, u)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(u.size)
        h = 1e-6
        fd = (
            pq.energy_j_lambda(spec, 0.0, u + h * v)
            - pq.energy_j_lambda(spec, 0.0, u - h * v)
        ) / (2 * h)
        assert residual @ v == pytest.approx(fd, rel=1e-6)
        assert np.abs(residual).max() > 0.0

    def test_zero_field_rejected_below_two(self):
        spec = make_interval_spec(p=1.5, q=3.0)
        with pytest.raises(ValueError):
            pq.weak_residual(spec, 1.0, np.zeros(spec.mesh.n_nodes))


class TestGradientConsistency:
    @pytest.mark.parametrize("p,q", [(2.5, 3.0), (4.0, 3.0), (3.5, 2.5)])
    def test_directional_derivative_p_above_two(self, p, q):
        spec = make_interval_spec(n_elements=24, p=p, q=q)
        rng = np.random.default_rng(42)
        for _ in range(20):
            u = rng.standard_normal(spec.mesh.n_nodes)
            v = rng.standard_normal(spec.mesh.n_nodes)
            lam = float(rng.uniform(0.0, 5.0))
            h = 1e-6 * np.linalg.norm(u)
            fd = (
                pq.energy_j_lambda(spec, lam, u + h * v)
                - pq.energy_j_lambda(spec, lam, u - h * v)
            ) / (2 * h)
            pairing = pq.weak_residual(spec, lam, u) @ v
            assert pairing == pytest.approx(fd, rel=1e-5, abs=1e-10)

    def test_directional_derivative_p_below_two(self):
        spec = make_interval_spec(n_elements=24, p=1.5, q=3.0)
        rng = np.random.default_rng(43)
        done = 0
        while done < 20:
            u = rng.standard_normal(spec.mesh.n_nodes)
            grads = pq.element_gradients(spec.mesh, u)
            if np.abs(grads).min() < 1e-3:
                continue  # only fields with no near-degenerate elements
            v = rng.standard_normal(spec.mesh.n_nodes)
            lam = float(rng.uniform(0.0, 5.0))
            h = 1e-6 * np.linalg.norm(u)
            fd = (
                pq.energy_j_lambda(spec, lam, u + h * v)
                - pq.energy_j_lambda(spec, lam, u - h * v)
            ) / (2 * h)
            pairing = pq.weak_residual(spec, lam, u) @ v
            assert pairing == pytest.approx(fd, rel=1e-5, abs=1e-10)
            done += 1


class TestRayleighQuotients:
    def test_cosine_mode_value(self):
        spec = make_interval_spec(n_elements=512, p=1.5, q=2.0)
        u = pq.interpolate(spec.mesh, lambda x: np.cos(np.pi * x))
        value = pq.rayleigh_q(spec, u)
        assert value == pytest.approx(np.pi**2, rel=5e-3)

    def test_mass_free_field_gives_infinity(self):
        mesh = pq.build_interval_mesh(8, 0.0, 1.0)
        a = pq.weight_from_expression(mesh, "indicator", {"box": [0.0, 0.25]})
        spec = pq.ProblemSpec(
            mesh=mesh, p=1.5, q=3.0, weight_a=a, weight_b=np.zeros(2)
        )
        u = np.zeros(mesh.n_nodes)
        u[-2:] = 1.0  # supported where the weight vanishes
        assert pq.rayleigh_q(spec, u) == math.inf
        assert pq.rayleigh_pq(spec, u) == math.inf

    def test_scale_invariance(self, interval_spec):
        u = random_field(interval_spec, 9)
        assert pq.rayleigh_q(interval_spec, 7.0 * u) == pytest.approx(
            pq.rayleigh_q(interval_spec, u), rel=1e-12
        )

    def test_zero_field_rejected(self, interval_spec):
        with pytest.raises(ValueError):
            pq.rayleigh_q(interval_spec, np.zeros(65))
        with pytest.raises(ValueError):
            pq.rayleigh_pq(interval_spec, np.zeros(65))

    def test_two_exponent_quotient_dominates(self, interval_spec):
        for seed in range(5):
            u = random_field(interval_spec, seed)
            assert pq.rayleigh_pq(interval_spec, u) >= pq.rayleigh_q(
                interval_spec, u
            )

    def test_large_scaling_limit(self):
        spec = make_interval_spec(n_elements=64, p=1.5, q=3.0)
        u = pq.project_to_cone(spec, random_field(spec, 1)).coefficients
        rq = pq.rayleigh_q(spec, u)
        rpq_scaled = pq.rayleigh_pq(spec, 1e3 * u)
        assert abs(rpq_scaled - rq) <= 1e-3 * rq


class TestAbNorm:
    def test_zero_field(self, interval_spec):
        assert pq.ab_norm(interval_spec, np.zeros(65)) == 0.0

    def test_unit_constant(self):
        spec = make_interval_spec(q=3.0)
        assert pq.ab_norm(spec, np.ones(65)) == pytest.approx(1.0, rel=1e-12)

    def test_positive_definite_on_random_fields(self, interval_spec):
        for seed in range(50):
            u = random_field(interval_spec, seed)
            assert pq.ab_norm(interval_spec, u) > 0.0


class TestHomogeneity:
    @settings(deadline=None, max_examples=60)
    @given(
        t=st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 1e-4),
        seed=st.integers(0, 2**16),
    )
    def test_power_scalings(self, t, seed):
        spec = make_interval_spec(n_elements=16, p=1.5, q=3.0)
        u = random_field(spec, seed)
        p, q = spec.p, spec.q
        t1, t2, t3 = fn.t_values(spec, u)
        s1, s2, s3 = fn.t_values(spec, t * u)
        assert s1 == pytest.approx(abs(t) ** p * t1, rel=1e-12)
        assert s2 == pytest.approx(abs(t) ** q * t2, rel=1e-12)
        assert s3 == pytest.approx(abs(t) ** q * t3, rel=1e-12)
        g = pq.cone_residual(spec, u)
        gs = pq.cone_residual(spec, t * u)
        assert gs == pytest.approx(abs(t) ** (q - 2.0) * t * g, rel=1e-12, abs=1e-300)


class TestNehariResidualAndScale:
    def test_arithmetic_zero(self):
        spec = make_interval_spec()
        u = random_field(spec, 2)
        t1, t2, t3 = fn.t_values(spec, u)
        lam = (t1 + t2) / t3
        assert pq.nehari_residual(spec, lam, u) == pytest.approx(0.0, abs=1e-10)

    def test_constant_sign(self):
        spec = make_interval_spec(q=3.0)
        u = np.full(65, 2.0)
        assert pq.nehari_residual(spec, 1.0, u) < 0.0

    def test_scale_lands_on_manifold(self):
        spec = make_interval_spec(n_elements=64, p=1.5, q=3.0)
        v = pq.project_to_cone(spec, random_field(spec, 4))
        lam = 2.0 * pq.rayleigh_q(spec, v)
        t, scaled = pq.nehari_scale(spec, lam, v)
        assert t > 0.0
        t1, t2, t3 = fn.t_values(spec, scaled)
        scale = t1 + t2 + lam * t3
        assert abs(pq.nehari_residual(spec, lam, scaled)) <= 1e-12 * scale

    def test_closed_form_factor(self):
        spec = make_interval_spec(p=1.5, q=3.5)
        v = pq.project_to_cone(spec, random_field(spec, 8))
        t1, t2, t3 = fn.t_values(spec, v)
        lam = (2.0 + t2) / t3  # denominator lam*T3 - T2 = 2
        t, _ = pq.nehari_scale(spec, lam, v)
        assert t == pytest.approx((t1 / 2.0) ** (1.0 / (3.5 - 1.5)), rel=1e-12)

    def test_unit_factor_fixed_point(self):
        spec = make_interval_spec(p=1.5, q=3.0)
        v = pq.project_to_cone(spec, random_field(spec, 12))
        t1, t2, t3 = fn.t_values(spec, v)
        lam = (t1 + t2) / t3  # denominator equals T1
        t, _ = pq.nehari_scale(spec, lam, v)
        assert t == pytest.approx(1.0, rel=1e-12)

    def test_below_quotient_rejected(self):
        spec = make_interval_spec(p=1.5, q=3.0)
        v = pq.project_to_cone(spec, random_field(spec, 5))
        lam = 0.5 * pq.rayleigh_q(spec, v)
        with pytest.raises(ScalingWitnessError):
            pq.nehari_scale(spec, lam, v)

    def test_requires_p_below_q(self):
        spec = make_interval_spec(p=3.5, q=3.0)
        with pytest.raises(ValueError):
            pq.nehari_scale(spec, 10.0, random_field(spec, 1))

    def test_manifold_energy_identity(self):
        spec = make_interval_spec(n_elements=64, p=1.5, q=3.0)
        for seed in range(5):
            v = pq.project_to_cone(spec, random_field(spec, seed))
            lam = 1.5 * pq.rayleigh_q(spec, v)
            _, scaled = pq.nehari_scale(spec, lam, v)
            t1 = fn.t_values(spec, scaled)[0]
            expected = (spec.q - spec.p) / (spec.p * spec.q) * t1
            value = pq.energy_j_lambda(spec, lam, scaled)
            assert value == pytest.approx(expected, rel=1e-10)
            assert value > 0.0


class TestProjectToCone:
    def test_idempotence(self):
        spec = make_interval_spec(n_elements=32)
        once = pq.project_to_cone(spec, random_field(spec, 6))
        twice = pq.project_to_cone(spec, once)
        delta = np.abs(once.coefficients - twice.coefficients).max()
        assert delta <= 1e-12 * max(np.abs(once.coefficients).max(), 1.0)

    def test_constant_projects_to_zero(self):
        spec = make_interval_spec(q=3.0)
        projected = pq.project_to_cone(spec, pq.constant_field(spec.mesh, 4.0))
        assert np.abs(projected.coefficients).max() <= 1e-12

    def test_linear_field_shift_oracle(self):
        # oracle: root of the analytic shifted mass ((1-s)^3 - s^3)/3 = 0
        spec = make_interval_spec(n_elements=64, q=3.0)
        shift_oracle = brentq(lambda s: (1 - s) ** 3 - s**3, 0.0, 1.0)
        assert shift_oracle == pytest.approx(0.5, abs=1e-12)
        u = pq.interpolate(spec.mesh, lambda x: x)
        projected = pq.project_to_cone(spec, u)
        shift = u.coefficients[0] - projected.coefficients[0]
        assert shift == pytest.approx(shift_oracle, abs=1e-10)
        scale = fn.cone_scale(spec, projected)
        assert abs(pq.cone_residual(spec, projected)) <= 1e-12 * scale

    def test_odd_under_sign_flip(self):
        spec = make_interval_spec(n_elements=32)
        for seed in range(5):
            u = random_field(spec, seed)
            plus = pq.project_to_cone(spec, u).coefficients
            minus = pq.project_to_cone(spec, -u).coefficients
            assert np.abs(minus + plus).max() <= 1e-12 * max(
                np.abs(plus).max(), 1.0
            )

    def test_unbracketed_root_rejected(self):
        mesh = pq.build_interval_mesh(4, 0.0, 1.0)
        spec = pq.ProblemSpec(
            mesh=mesh,
            p=1.5,
            q=3.0,
            weight_a=np.zeros(mesh.n_nodes),
            weight_b=np.zeros(2),
        )
        with pytest.raises(ValueError, match="bracket"):
            pq.project_to_cone(spec, random_field(spec, 0))


class TestNormalizeMass:
    def test_quarter_root_scaling(self):
        spec = make_interval_spec(q=4.0)
        u = pq.constant_field(spec.mesh, 2.0)  # T3 = 2^4 = 16
        scaled = pq.normalize_mass(spec, u)
        assert scaled.coefficients[0] == pytest.approx(1.0, rel=1e-12)
        assert fn.t_values(spec, scaled)[2] == pytest.approx(1.0, rel=1e-12)

    def test_unit_mass_fixed(self):
        spec = make_interval_spec(q=3.0)
        u = pq.normalize_mass(spec, random_field(spec, 3))
        again = pq.normalize_mass(spec, u)
        np.testing.assert_allclose(again.coefficients, u.coefficients, rtol=1e-12)

    def test_zero_mass_rejected(self):
        mesh = pq.build_interval_mesh(8, 0.0, 1.0)
        a = pq.weight_from_expression(mesh, "indicator", {"box": [0.0, 0.25]})
        spec = pq.ProblemSpec(
            mesh=mesh, p=1.5, q=3.0, weight_a=a, weight_b=np.zeros(2)
        )
        u = np.zeros(mesh.n_nodes)
        u[-2:] = 1.0
        with pytest.raises(ValueError):
            pq.normalize_mass(spec, u)


class TestEigenpairMassIdentity:
    def test_identity_on_manifold_fields(self):
        # any field on the scaling manifold satisfies lam - T2/T3 = T1/T3
        spec = make_interval_spec(n_elements=32, p=1.5, q=3.0)
        for seed in range(5):
            v = pq.project_to_cone(spec, random_field(spec, seed))
            lam = 1.7 * pq.rayleigh_q(spec, v)
            _, scaled = pq.nehari_scale(spec, lam, v)
            t1, t2, t3 = fn.t_values(spec, scaled)
            assert lam - t2 / t3 == pytest.approx(t1 / t3, rel=1e-10)
            assert lam - t2 / t3 > 0.0
