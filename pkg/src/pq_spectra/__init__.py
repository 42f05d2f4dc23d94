"""Finite-element solver for the spectral threshold and eigenpair structure
of a weighted two-exponent diffusion operator with boundary coupling."""

from .descent import ConvergenceError, SolverOptions
from .functionals import (
    FunctionalValues,
    ScalingWitnessError,
    ab_norm,
    cone_residual,
    energy_j_lambda,
    functional_values,
    nehari_residual,
    nehari_scale,
    normalize_mass,
    project_to_cone,
    rayleigh_pq,
    rayleigh_q,
    relative_weak_residual,
    weak_residual,
)
from .lambda1 import (
    ConsistencyReport,
    KktReport,
    ThresholdResult,
    check_consistency,
    solve_lambda1,
    solve_lambda_1q,
)
from .mesh import (
    DiscreteField,
    Mesh,
    MeshMismatchError,
    boundary_power_integral,
    build_interval_mesh,
    build_rectangle_mesh,
    constant_field,
    element_gradients,
    gradient_power_integral,
    interpolate,
    validate_mesh,
    volume_power_integral,
)
from .problem import (
    HypothesisViolationError,
    ProblemSpec,
    ValidationReport,
    bump_pair_seed,
    validate_problem,
    weight_from_expression,
)
from .spectrum import (
    EigenPair,
    KktCheckReport,
    NonexistenceCertificate,
    certify_nonexistence,
    kkt_check,
    solve_coercive,
    solve_nehari,
    zero_eigenpair,
)
from .sweep import (
    ConfigError,
    HypothesisError,
    RunPlan,
    SweepReport,
    SweepRow,
    build_problem,
    emit_outputs,
    load_field_file,
    parse_config,
    run_sweep,
    write_field_file,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "SolverOptions",
    "FunctionalValues",
    "ScalingWitnessError",
    "ab_norm",
    "cone_residual",
    "energy_j_lambda",
    "functional_values",
    "nehari_residual",
    "nehari_scale",
    "normalize_mass",
    "project_to_cone",
    "rayleigh_pq",
    "rayleigh_q",
    "relative_weak_residual",
    "weak_residual",
    "ConsistencyReport",
    "KktReport",
    "ThresholdResult",
    "check_consistency",
    "solve_lambda1",
    "solve_lambda_1q",
    "DiscreteField",
    "Mesh",
    "MeshMismatchError",
    "boundary_power_integral",
    "build_interval_mesh",
    "build_rectangle_mesh",
    "constant_field",
    "element_gradients",
    "gradient_power_integral",
    "interpolate",
    "validate_mesh",
    "volume_power_integral",
    "HypothesisViolationError",
    "ProblemSpec",
    "ValidationReport",
    "bump_pair_seed",
    "validate_problem",
    "weight_from_expression",
    "EigenPair",
    "KktCheckReport",
    "NonexistenceCertificate",
    "certify_nonexistence",
    "kkt_check",
    "solve_coercive",
    "solve_nehari",
    "zero_eigenpair",
    "ConfigError",
    "HypothesisError",
    "RunPlan",
    "SweepReport",
    "SweepRow",
    "build_problem",
    "emit_outputs",
    "load_field_file",
    "parse_config",
    "run_sweep",
    "write_field_file",
    "__version__",
]
