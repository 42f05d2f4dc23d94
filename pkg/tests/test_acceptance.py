"""Acceptance suite: every criterion prints one PASS line when it holds.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
report lines alongside the pytest verdicts.
"""

import time

import numpy as np
import pytest

import pq_spectra as pq
from pq_spectra import functionals as fn
from pq_spectra.cli import main
from pq_spectra.functionals import ScalingWitnessError
from pq_spectra.sweep import RunPlan
from conftest import make_interval_spec, make_square_spec


def report(number, detail):
    print(f"ACCEPTANCE {number}: PASS  [{detail}]")


def make_plan(p, q, resolution, multipliers, out_dir, seed=0, workers=1):
    return RunPlan(
        domain="interval",
        bounds=(0.0, 1.0),
        resolution=(resolution,),
        p=p,
        q=q,
        weight_a={"kind": "constant", "value": 1.0},
        weight_b={"kind": "constant", "value": 0.0},
        oracle="full",
        grid_values=None,
        grid_multipliers=tuple(multipliers),
        include_zero=True,
        solver=pq.SolverOptions(seed=seed),
        consistency_samples=10,
        out_dir=str(out_dir),
        formats=("csv", "summary", "eigenfunctions"),
        workers=workers,
    )


EXPECTED_STATUSES = [
    "eigenvalue_zero",
    "no_solution",
    "boundary_excluded",
    "eigenpair",
    "eigenpair",
    "eigenpair",
]


@pytest.fixture(scope="module")
def sweeps(tmp_path_factory):
    """Trichotomy sweeps for both exponent orders (criteria 3 and 4)."""
    out = tmp_path_factory.mktemp("acc")
    multipliers = (0.5, 1.0, 1.05, 2.0, 10.0)
    results = {}
    start = time.perf_counter()
    for p, q in ((1.5, 3.0), (4.0, 3.0)):
        plan = make_plan(p, q, 128, multipliers, out / f"p{p}")
        results[(p, q)] = pq.run_sweep(plan)
    return results, time.perf_counter() - start


def spec_of_row(row, p, q):
    mesh = row.field.mesh
    return pq.ProblemSpec(
        mesh=mesh,
        p=p,
        q=q,
        weight_a=np.ones(mesh.n_nodes),
        weight_b=np.zeros(mesh.boundary_nodes.size),
    )


class TestCriterion1ClassicalOracle:
    def test_interval(self):
        start = time.perf_counter()
        spec = make_interval_spec(n_elements=256, p=1.5, q=2.0)
        value = pq.solve_lambda_1q(spec).lambda1
        elapsed = time.perf_counter() - start
        rel = abs(value - np.pi**2) / np.pi**2
        assert rel <= 1e-2
        assert elapsed < 5.0
        report(1, f"interval: {value:.6f} vs pi^2, rel {rel:.2e}, {elapsed:.2f}s")

    def test_square(self):
        start = time.perf_counter()
        spec = make_square_spec(n=32, p=1.5, q=2.0)
        value = pq.solve_lambda_1q(spec).lambda1
        elapsed = time.perf_counter() - start
        rel = abs(value - np.pi**2) / np.pi**2
        assert rel <= 2e-2
        assert elapsed < 60.0
        report(1, f"square 32x32: {value:.6f} vs pi^2, rel {rel:.2e}, {elapsed:.2f}s")


class TestCriterion2PIndependence:
    def test_threshold_independent_of_p(self):
        start = time.perf_counter()
        reference = pq.solve_lambda_1q(
            make_interval_spec(n_elements=256, p=1.5, q=3.0)
        ).lambda1
        values = [reference]
        for p in (1.5, 2.0, 2.5):
            spec = make_interval_spec(n_elements=256, p=p, q=3.0)
            values.append(pq.solve_lambda1(spec).lambda1)
        elapsed = time.perf_counter() - start
        for a in values:
            for b in values:
                assert abs(a - b) / b <= 2e-2
        assert elapsed < 60.0
        report(2, f"values {['%.6f' % v for v in values]}, {elapsed:.2f}s")


class TestCriterion3Trichotomy:
    @pytest.mark.parametrize("p,q", [(1.5, 3.0), (4.0, 3.0)])
    def test_statuses_and_verification(self, sweeps, p, q):
        results, elapsed = sweeps
        rep = results[(p, q)]
        statuses = [row.status for row in rep.rows]
        assert statuses == EXPECTED_STATUSES
        for row in rep.rows:
            if row.status != "eigenpair":
                continue
            spec = spec_of_row(row, p, q)
            check = pq.kkt_check(spec, row.lam, row.field)
            assert check.weak_residual_norm <= 1e-8
            assert check.mass_identity_defect <= 1e-8
            assert check.passed
        assert elapsed < 180.0
        report(3, f"(p,q)=({p},{q}) statuses ok, eigenpairs verified, "
                  f"both sweeps {elapsed:.1f}s")


class TestCriterion4CaseIdentities:
    def test_manifold_route_identity(self, sweeps):
        results, _ = sweeps
        rep = results[(1.5, 3.0)]
        pairs = [row.eigenpair for row in rep.rows if row.status == "eigenpair"]
        assert pairs
        for pair in pairs:
            assert pair.case_tag == "nehari"
            v = pair.values
            expected = (3.0 - 1.5) / (1.5 * 3.0) * v.T1
            assert v.J_lambda == pytest.approx(expected, rel=1e-10)
            assert pair.m_lambda is not None and pair.m_lambda > 0.0
        report(4, f"{len(pairs)} manifold eigenpairs satisfy the energy identity")

    def test_coercive_route_sign(self, sweeps):
        results, _ = sweeps
        rep = results[(4.0, 3.0)]
        pairs = [row.eigenpair for row in rep.rows if row.status == "eigenpair"]
        assert pairs
        for pair in pairs:
            assert pair.case_tag == "coercive"
            assert pair.values.J_lambda < 0.0
        report(4, f"{len(pairs)} coercive eigenpairs have negative energy")


class TestCriterion5ScalingFormula:
    def test_hundred_admissible_fields(self):
        spec = make_interval_spec(n_elements=64, p=1.5, q=3.0)
        rng = np.random.default_rng(123)
        checked = 0
        while checked < 100:
            raw = rng.standard_normal(spec.mesh.n_nodes)
            v = pq.project_to_cone(spec, raw)
            quotient = pq.rayleigh_q(spec, v)
            if not np.isfinite(quotient):
                continue
            lam = quotient * float(rng.uniform(1.5, 4.0))
            t, scaled = pq.nehari_scale(spec, lam, v)
            assert t > 0.0
            t1, t2, t3 = fn.t_values(spec, scaled)
            scale = t1 + t2 + lam * t3
            assert abs(pq.nehari_residual(spec, lam, scaled)) <= 1e-12 * scale
            checked += 1
        for _ in range(10):
            raw = rng.standard_normal(spec.mesh.n_nodes)
            v = pq.project_to_cone(spec, raw)
            lam = 0.5 * pq.rayleigh_q(spec, v)
            with pytest.raises(ScalingWitnessError):
                pq.nehari_scale(spec, lam, v)
        report(5, "100 admissible scalings on-manifold, 10 rejections raised")


class TestCriterion6QuotientLimit:
    def test_fifty_cone_probes(self):
        spec = make_interval_spec(n_elements=128, p=1.5, q=3.0)
        lambda1 = pq.solve_lambda1(spec).lambda1
        rng = np.random.default_rng(321)
        worst_gap = 0.0
        checked = 0
        while checked < 50:
            raw = rng.standard_normal(spec.mesh.n_nodes)
            v = pq.project_to_cone(spec, raw).coefficients
            rq = pq.rayleigh_q(spec, v)
            if not np.isfinite(rq):
                continue
            rpq_scaled = pq.rayleigh_pq(spec, 1e3 * v)
            gap = abs(rpq_scaled - rq) / rq
            worst_gap = max(worst_gap, gap)
            assert gap <= 1e-3
            assert rpq_scaled >= lambda1 - 1e-6
            checked += 1
        report(6, f"50 probes, worst relative gap {worst_gap:.2e}")


class TestCriterion7GradientConsistency:
    def test_central_differences(self):
        rng = np.random.default_rng(7)
        for p, q, needs_clean_gradients in ((2.5, 3.0, False), (1.5, 3.0, True)):
            spec = make_interval_spec(n_elements=24, p=p, q=q)
            done = 0
            while done < 20:
                u = rng.standard_normal(spec.mesh.n_nodes)
                if needs_clean_gradients:
                    grads = pq.element_gradients(spec.mesh, u)
                    if np.abs(grads).min() < 1e-3:
                        continue
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
        report(7, "20 trials each at p=2.5 and p=1.5 match central differences")


class TestCriterion8HomogeneityProjection:
    def test_homogeneity_identities(self):
        spec = make_interval_spec(n_elements=32, p=1.5, q=3.0)
        rng = np.random.default_rng(88)
        for _ in range(50):
            u = rng.standard_normal(spec.mesh.n_nodes)
            t = float(rng.uniform(-4.0, 4.0))
            if abs(t) < 1e-3:
                continue
            t1, t2, t3 = fn.t_values(spec, u)
            s1, s2, s3 = fn.t_values(spec, t * u)
            assert s1 == pytest.approx(abs(t) ** spec.p * t1, rel=1e-12)
            assert s2 == pytest.approx(abs(t) ** spec.q * t2, rel=1e-12)
            assert s3 == pytest.approx(abs(t) ** spec.q * t3, rel=1e-12)
            g, gs = pq.cone_residual(spec, u), pq.cone_residual(spec, t * u)
            assert gs == pytest.approx(
                abs(t) ** (spec.q - 2.0) * t * g, rel=1e-12, abs=1e-300
            )
        report(8, "power scalings of T1/T2/T3/g hold at 1e-12")

    def test_projection_and_norm(self):
        spec = make_interval_spec(n_elements=32, p=1.5, q=3.0)
        rng = np.random.default_rng(89)
        for _ in range(20):
            u = rng.standard_normal(spec.mesh.n_nodes)
            once = pq.project_to_cone(spec, u).coefficients
            twice = pq.project_to_cone(spec, once).coefficients
            scale = max(np.abs(once).max(), 1.0)
            assert np.abs(twice - once).max() <= 1e-12 * scale
            flipped = pq.project_to_cone(spec, -u).coefficients
            assert np.abs(flipped + once).max() <= 1e-12 * scale
        positive = 0
        for _ in range(200):
            u = rng.standard_normal(spec.mesh.n_nodes)
            if pq.ab_norm(spec, u) > 0.0:
                positive += 1
        assert positive == 200
        report(8, "projection idempotent and odd; norm positive on 200 fields")


class TestCriterion9MeshConvergence:
    def test_interval_refinement(self):
        coarse = pq.solve_lambda1(make_interval_spec(512, 1.5, 3.0)).lambda1
        fine = pq.solve_lambda1(make_interval_spec(1024, 1.5, 3.0)).lambda1
        rel = abs(coarse - fine) / fine
        assert rel < 1e-2
        report(9, f"interval 512 -> 1024: relative change {rel:.2e}")

    def test_square_refinement(self):
        coarse = pq.solve_lambda1(make_square_spec(16, 1.5, 3.0)).lambda1
        fine = pq.solve_lambda1(make_square_spec(32, 1.5, 3.0)).lambda1
        rel = abs(coarse - fine) / fine
        assert rel < 5e-2
        report(9, f"square 16^2 -> 32^2: relative change {rel:.2e}")


CONFIG_TEMPLATE = """
[problem]
domain = "interval"
bounds = [0.0, 1.0]
resolution = 48
p = 1.5
q = 3.0

[problem.weight_a]
kind = "constant"
value = 1.0

[lambda_grid]
multipliers = [0.5, 1.0, 2.0]
include_zero = true

[solver]
seed = 11

[output]
directory = "{out}"
workers = 1
"""


class TestCriterion10Determinism:
    def test_byte_identical_csv_across_workers(self, tmp_path):
        cfg = tmp_path / "det.toml"
        cfg.write_text(CONFIG_TEMPLATE.format(out=str(tmp_path / "w1")))
        assert main(["run", str(cfg)]) == 0
        assert main(
            ["run", str(cfg), "--out", str(tmp_path / "w4"), "--workers", "4"]
        ) == 0
        csv1 = (tmp_path / "w1" / "sweep.csv").read_bytes()
        csv4 = (tmp_path / "w4" / "sweep.csv").read_bytes()
        assert csv1 == csv4
        sum1 = (tmp_path / "w1" / "summary.json").read_bytes()
        sum4 = (tmp_path / "w4" / "summary.json").read_bytes()
        assert sum1 == sum4
        report(10, f"{len(csv1)} CSV bytes identical, workers 1 vs 4")
