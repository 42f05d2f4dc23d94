"""Run plans, sweep orchestration and bit-stable report emission.

A run plan is parsed from a TOML config, the threshold is solved once, and
each grid value of lam is dispatched by the spectrum trichotomy: the zero
row gets the constant eigenpair, values in (0, threshold] get nonexistence
certificates (the threshold itself flagged as the excluded boundary case),
and values above it get eigenpair solves.  Rows execute independently with
per-row seeds derived from the master seed and the row index, so reports
are byte-identical for a fixed plan regardless of the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .descent import SolverOptions
from .lambda1 import ConsistencyReport, ThresholdResult, check_consistency, solve_lambda1
from .mesh import DiscreteField, Mesh, build_interval_mesh, build_rectangle_mesh
from .problem import ProblemSpec, validate_problem, weight_from_expression
from .spectrum import (
    EigenPair,
    certify_nonexistence,
    solve_coercive,
    solve_nehari,
    zero_eigenpair,
)

__all__ = [
    "RunPlan",
    "SweepRow",
    "SweepReport",
    "ConfigError",
    "HypothesisError",
    "parse_config",
    "build_problem",
    "run_sweep",
    "emit_outputs",
    "load_field_file",
    "write_field_file",
]

CSV_HEADER = "lambda,status,case_tag,J_value,T1,T2,T3,weak_residual,iterations,wall_ms"

STATUS_ZERO = "eigenvalue_zero"
STATUS_NONE = "no_solution"
STATUS_BOUNDARY = "boundary_excluded"
STATUS_EIGENPAIR = "eigenpair"
STATUS_FAILED = "failed"


class ConfigError(ValueError):
    """The configuration file is malformed or inconsistent."""


class HypothesisError(ConfigError):
    """The configured problem violates the standing hypotheses."""

    def __init__(self, violated: tuple[str, ...]):
        self.violated = violated
        super().__init__("hypotheses violated: " + ", ".join(violated))


@dataclass(frozen=True)
class RunPlan:
    """Validated run configuration with defaults resolved."""

    domain: str
    bounds: tuple[float, ...]
    resolution: tuple[int, ...]
    p: float
    q: float
    weight_a: dict
    weight_b: dict
    oracle: str
    grid_values: tuple[float, ...] | None
    grid_multipliers: tuple[float, ...] | None
    include_zero: bool
    solver: SolverOptions
    consistency_samples: int
    out_dir: str
    formats: tuple[str, ...]
    workers: int


@dataclass
class SweepRow:
    """One grid point of a sweep; fields beyond the CSV schema stay in memory."""

    lam: float
    status: str
    case_tag: str
    J_value: float
    T1: float
    T2: float
    T3: float
    weak_residual: float
    iterations: int
    wall_ms: float
    field: DiscreteField | None = None
    eigenpair: EigenPair | None = None
    margin: float | None = None
    probe_min_quotient: float | None = None
    message: str = ""


@dataclass
class SweepReport:
    threshold: ThresholdResult
    rows: list[SweepRow]
    consistency: ConsistencyReport
    config_hash: str
    mesh_nodes: int
    mesh_elements: int
    seed: int


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def parse_config(path: str | Path) -> RunPlan:
    """Parse and structurally validate a TOML run configuration.

    Fills the documented defaults (tol 1e-8, restarts 3, seed 0).  Parse
    errors carry the decoder's line information; hypothesis checks on the
    assembled problem happen in :func:`build_problem`.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from exc

    problem = data.get("problem")
    _require(isinstance(problem, dict), "missing [problem] section")

    domain = problem.get("domain")
    _require(domain in ("interval", "rectangle"), f"unknown domain {domain!r}")

    bounds = tuple(float(v) for v in problem.get("bounds", ()))
    if domain == "interval":
        _require(len(bounds) == 2, "interval bounds need [x0, x1]")
        _require(bounds[0] < bounds[1], f"degenerate interval bounds {bounds}")
        resolution_raw = problem.get("resolution")
        _require(
            isinstance(resolution_raw, int) and resolution_raw >= 2,
            "interval resolution must be an integer >= 2",
        )
        resolution = (int(resolution_raw),)
    else:
        _require(len(bounds) == 4, "rectangle bounds need [x0, x1, y0, y1]")
        _require(
            bounds[0] < bounds[1] and bounds[2] < bounds[3],
            f"degenerate rectangle bounds {bounds}",
        )
        resolution_raw = problem.get("resolution")
        if isinstance(resolution_raw, int):
            resolution_raw = [resolution_raw, resolution_raw]
        _require(
            isinstance(resolution_raw, list)
            and len(resolution_raw) == 2
            and all(isinstance(v, int) and v >= 2 for v in resolution_raw),
            "rectangle resolution must be [nx, ny] with integers >= 2",
        )
        resolution = (int(resolution_raw[0]), int(resolution_raw[1]))

    _require("p" in problem and "q" in problem, "problem needs exponents p and q")
    p = float(problem["p"])
    q = float(problem["q"])

    weight_a = dict(problem.get("weight_a", {"kind": "constant", "value": 1.0}))
    weight_b = dict(problem.get("weight_b", {"kind": "constant", "value": 0.0}))
    for name, decl in (("weight_a", weight_a), ("weight_b", weight_b)):
        _require("kind" in decl, f"{name} declaration needs a 'kind'")

    oracle = problem.get("oracle", "full")
    _require(oracle in ("full", "q_laplacian"), f"unknown oracle mode {oracle!r}")

    grid = data.get("lambda_grid", {})
    values = grid.get("values")
    multipliers = grid.get("multipliers")
    _require(
        values is None or multipliers is None,
        "lambda_grid takes either 'values' or 'multipliers', not both",
    )
    if values is None and multipliers is None and "count" in grid:
        lo, hi = (float(v) for v in grid.get("range", (0.5, 3.0)))
        count = int(grid["count"])
        _require(count >= 1 and lo > 0 and hi >= lo, "bad relative grid spec")
        multipliers = list(np.linspace(lo, hi, count))
    grid_values = None
    grid_multipliers = None
    if values is not None:
        grid_values = tuple(float(v) for v in values)
        _require(all(v >= 0.0 for v in grid_values), "grid values must be >= 0")
    if multipliers is not None:
        grid_multipliers = tuple(float(v) for v in multipliers)
        _require(
            all(v >= 0.0 for v in grid_multipliers), "grid multipliers must be >= 0"
        )
    include_zero = bool(grid.get("include_zero", grid_multipliers is not None))

    solver_cfg = data.get("solver", {})
    solver = SolverOptions(
        tol=float(solver_cfg.get("tol", 1e-8)),
        max_iters=int(solver_cfg.get("max_iters", 600)),
        restarts=int(solver_cfg.get("restarts", 3)),
        seed=int(solver_cfg.get("seed", 0)),
        probes=int(solver_cfg.get("probes", 64)),
    )
    _require(solver.tol > 0 and solver.max_iters > 0, "bad solver tolerances")

    output = data.get("output", {})
    formats = tuple(output.get("formats", ("csv", "summary", "eigenfunctions")))
    for fmt in formats:
        _require(
            fmt in ("csv", "summary", "eigenfunctions"), f"unknown format {fmt!r}"
        )
    workers = int(output.get("workers", 1))
    _require(workers >= 1, "workers must be >= 1")

    return RunPlan(
        domain=domain,
        bounds=bounds,
        resolution=resolution,
        p=p,
        q=q,
        weight_a=weight_a,
        weight_b=weight_b,
        oracle=oracle,
        grid_values=grid_values,
        grid_multipliers=grid_multipliers,
        include_zero=include_zero,
        solver=solver,
        consistency_samples=int(data.get("consistency", {}).get("samples", 20)),
        out_dir=str(output.get("directory", "out")),
        formats=formats,
        workers=workers,
    )


def _build_mesh(plan: RunPlan) -> Mesh:
    if plan.domain == "interval":
        return build_interval_mesh(plan.resolution[0], plan.bounds[0], plan.bounds[1])
    return build_rectangle_mesh(plan.resolution[0], plan.resolution[1], plan.bounds)


def build_problem(plan: RunPlan) -> ProblemSpec:
    """Assemble the mesh and weights; raise HypothesisError on violations."""
    mesh = _build_mesh(plan)
    try:
        a_decl = dict(plan.weight_a)
        b_decl = dict(plan.weight_b)
        a = weight_from_expression(mesh, a_decl.pop("kind"), a_decl, "volume")
        b = weight_from_expression(mesh, b_decl.pop("kind"), b_decl, "boundary")
    except (KeyError, ValueError) as exc:
        if "negative" in str(exc):
            raise HypothesisError(("H_ab",)) from exc
        raise ConfigError(f"weight declaration invalid: {exc}") from exc
    spec = ProblemSpec(mesh=mesh, p=plan.p, q=plan.q, weight_a=a, weight_b=b)
    report = validate_problem(spec, q_laplacian_path=plan.oracle == "q_laplacian")
    if not report.ok:
        raise HypothesisError(report.violated_hypotheses)
    return spec


def config_hash(plan: RunPlan) -> str:
    """Hash of the determinism-relevant plan sections (problem, grid, solver).

    Output settings (directory, formats, workers) are excluded so that runs
    differing only in where they write produce identical summaries.
    """
    payload = {
        "domain": plan.domain,
        "bounds": plan.bounds,
        "resolution": plan.resolution,
        "p": plan.p,
        "q": plan.q,
        "weight_a": plan.weight_a,
        "weight_b": plan.weight_b,
        "oracle": plan.oracle,
        "grid_values": plan.grid_values,
        "grid_multipliers": plan.grid_multipliers,
        "include_zero": plan.include_zero,
        "solver": asdict(plan.solver),
        "consistency_samples": plan.consistency_samples,
    }
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _row_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def _lambda_grid(plan: RunPlan, lambda1: float) -> list[float]:
    if plan.grid_values is not None:
        grid = list(plan.grid_values)
        if plan.include_zero and 0.0 not in grid:
            grid.insert(0, 0.0)
    elif plan.grid_multipliers is not None:
        grid = [m * lambda1 for m in plan.grid_multipliers]
        if plan.include_zero:
            grid.insert(0, 0.0)
    else:
        grid = []
    return sorted(grid)


def _solve_row(
    spec: ProblemSpec,
    threshold: ThresholdResult,
    lam: float,
    index: int,
    base_opts: SolverOptions,
) -> SweepRow:
    opts = base_opts.with_seed(_row_seed(base_opts.seed, index))
    start = time.perf_counter()
    try:
        if lam == 0.0:
            pair = zero_eigenpair(spec)
            status, case = STATUS_ZERO, pair.case_tag
        elif lam <= threshold.lambda1 * (1.0 + 1e-12):
            certificate = certify_nonexistence(spec, lam, threshold, opts)
            wall = 1e3 * (time.perf_counter() - start)
            status = STATUS_BOUNDARY if certificate.boundary_case else STATUS_NONE
            return SweepRow(
                lam=lam,
                status=status,
                case_tag="none",
                J_value=math.nan,
                T1=math.nan,
                T2=math.nan,
                T3=math.nan,
                weak_residual=math.nan,
                iterations=certificate.probe_count,
                wall_ms=wall,
                margin=certificate.margin,
                probe_min_quotient=certificate.probe_min_quotient,
            )
        elif spec.p < spec.q:
            pair = solve_nehari(spec, lam, threshold, opts)
            status, case = STATUS_EIGENPAIR, pair.case_tag
        else:
            pair = solve_coercive(spec, lam, threshold, opts)
            status, case = STATUS_EIGENPAIR, pair.case_tag
    except Exception as exc:  # per-row failures stay in-row
        wall = 1e3 * (time.perf_counter() - start)
        return SweepRow(
            lam=lam,
            status=STATUS_FAILED,
            case_tag="none",
            J_value=math.nan,
            T1=math.nan,
            T2=math.nan,
            T3=math.nan,
            weak_residual=math.nan,
            iterations=0,
            wall_ms=wall,
            message=f"{type(exc).__name__}: {exc}",
        )

    wall = 1e3 * (time.perf_counter() - start)
    return SweepRow(
        lam=lam,
        status=status,
        case_tag=case,
        J_value=pair.values.J_lambda,
        T1=pair.values.T1,
        T2=pair.values.T2,
        T3=pair.values.T3,
        weak_residual=pair.weak_residual_norm,
        iterations=pair.iterations,
        wall_ms=wall,
        field=pair.field,
        eigenpair=pair,
    )


def run_sweep(plan: RunPlan) -> SweepReport:
    """Solve the threshold once, then dispatch every grid row by trichotomy.

    Per-row failures are recorded in the row status; only a threshold
    failure aborts the sweep (surfaced as ConvergenceError).
    """
    spec = build_problem(plan)
    if plan.oracle != "full":
        raise ConfigError("sweeps need the full problem; oracle configs only "
                          "support the threshold command")
    threshold = solve_lambda1(spec, plan.solver)
    consistency = check_consistency(
        spec, threshold, samples=plan.consistency_samples, opts=plan.solver
    )

    grid = _lambda_grid(plan, threshold.lambda1)
    rows: list[SweepRow] = []
    if grid:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            futures = [
                pool.submit(_solve_row, spec, threshold, lam, index, plan.solver)
                for index, lam in enumerate(grid)
            ]
            rows = [future.result() for future in futures]

    return SweepReport(
        threshold=threshold,
        rows=rows,
        consistency=consistency,
        config_hash=config_hash(plan),
        mesh_nodes=spec.mesh.n_nodes,
        mesh_elements=spec.mesh.n_elements,
        seed=plan.solver.seed,
    )


# ---------------------------------------------------------------------------
# emission


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def _ensure_dir(directory: Path) -> None:
    if directory.exists():
        return
    if not directory.parent.exists():
        raise OSError(
            f"cannot create output directory {directory}: parent "
            f"{directory.parent} does not exist"
        )
    directory.mkdir()


def write_field_file(path: Path, field: DiscreteField) -> None:
    """Plain-text nodal data: coordinate columns then the nodal value."""
    mesh = field.mesh
    lines = []
    for node, value in zip(mesh.nodes, field.coefficients):
        cols = [_fmt(float(c)) for c in node] + [_fmt(float(value))]
        lines.append(" ".join(cols))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_field_file(mesh: Mesh, path: str | Path) -> DiscreteField:
    """Read a field file back; node coordinates must match the mesh order."""
    data = np.loadtxt(path, ndmin=2)
    expected = mesh.dimension + 1
    if data.shape != (mesh.n_nodes, expected):
        raise ValueError(
            f"{path}: expected {mesh.n_nodes} rows x {expected} columns, "
            f"got {data.shape}"
        )
    coords = data[:, : mesh.dimension]
    scale = max(float(np.abs(mesh.nodes).max()), 1.0)
    if not np.allclose(coords, mesh.nodes, atol=1e-9 * scale, rtol=0.0):
        raise ValueError(f"{path}: node coordinates do not match the mesh")
    return DiscreteField(mesh, data[:, -1])


def emit_outputs(report: SweepReport, plan: RunPlan) -> list[Path]:
    """Write sweep.csv, summary.json and eigenfunction data files.

    All numeric formatting uses 17 significant digits with '.' decimals and
    newline-only line endings.  The wall_ms column is emitted as 0 so the
    CSV stays byte-identical across reruns; measured timings live in the
    in-memory report and the console log only.
    """
    out = Path(plan.out_dir)
    _ensure_dir(out)
    written: list[Path] = []

    if "csv" in plan.formats:
        lines = [CSV_HEADER]
        for row in report.rows:
            lines.append(
                ",".join(
                    [
                        _fmt(row.lam),
                        row.status,
                        row.case_tag,
                        _fmt(row.J_value),
                        _fmt(row.T1),
                        _fmt(row.T2),
                        _fmt(row.T3),
                        _fmt(row.weak_residual),
                        str(row.iterations),
                        "0",
                    ]
                )
            )
        csv_path = out / "sweep.csv"
        csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        written.append(csv_path)

    if "summary" in plan.formats:
        threshold = report.threshold
        consistency = report.consistency
        summary = {
            "config_hash": report.config_hash,
            "provenance": {
                "mesh_nodes": report.mesh_nodes,
                "mesh_elements": report.mesh_elements,
                "seed": report.seed,
            },
            "lambda1": _fmt(threshold.lambda1),
            "lambda_1q": _fmt(consistency.lambda_1q),
            "threshold": {
                "iterations": threshold.iterations,
                "constraint_residuals": [
                    _fmt(v) for v in threshold.constraint_residuals
                ],
                "kkt_multipliers": [_fmt(v) for v in threshold.kkt.multipliers],
                "kkt_stationarity": _fmt(threshold.kkt.stationarity_residual),
            },
            "consistency": {
                "rel_gap": _fmt(consistency.rel_gap),
                "matches_q_value": consistency.lambda1_matches_lambda_1q,
                "dominates_q_value": consistency.lambda1_dominates_lambda_1q,
                "probe_count": consistency.probe_count,
                "probe_min_quotient": _fmt(consistency.probe_min_quotient),
                "probes_above_threshold": consistency.probes_above_threshold,
                "probe_ordering_ok": consistency.probe_ordering_ok,
            },
            "rows": [
                {
                    "lambda": _fmt(row.lam),
                    "status": row.status,
                    "case_tag": row.case_tag,
                    "margin": None if row.margin is None else _fmt(row.margin),
                    "message": row.message,
                }
                for row in report.rows
            ],
        }
        summary_path = out / "summary.json"
        summary_path.write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
            newline="\n",
        )
        written.append(summary_path)

    if "eigenfunctions" in plan.formats:
        for index, row in enumerate(report.rows):
            if row.field is None:
                continue
            dat_path = out / f"eigenfunction_{index}.dat"
            write_field_file(dat_path, row.field)
            written.append(dat_path)

    return written
