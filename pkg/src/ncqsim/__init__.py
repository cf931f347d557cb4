"""Simulation and analysis of quantum query algorithms with non-collapsing measurements."""

from .adversary import (
    BoundReport,
    WeightScheme,
    build_relation,
    closed_form_degrees,
    compute_bounds,
    load_profile,
    validate_weight_scheme,
    verify_hybrid_bound,
    verify_lifted_weights,
    verify_polynomial_inequality,
    verify_weight_identity,
)
from .algorithms import (
    AlgorithmSpec,
    Model,
    account_complexity,
    build_algorithm,
    collision_algorithm,
    nonadaptive_partition_algorithm,
    pdqp_search_algorithm,
)
from .bench import ExperimentSpec, estimate_success, fit_exponent, minimal_budget, verify_all
from .circuit import Gate, OracleCall, RunTranscript, Step, StepCircuit, total_variation
from .engine import (
    check_fidelity_monotone,
    run_cbqp,
    run_direct,
    run_purified,
    sample_transcripts,
    transcript_distribution,
)
from .errors import SimulationError
from .problems import ProblemInstance, ProblemKind, generate_instance
from .state import QuantumState, apply_unitary, born_distribution, fidelity, reduced_density_matrix

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "BoundReport",
    "ExperimentSpec",
    "Gate",
    "Model",
    "OracleCall",
    "ProblemInstance",
    "ProblemKind",
    "QuantumState",
    "RunTranscript",
    "SimulationError",
    "Step",
    "StepCircuit",
    "WeightScheme",
    "account_complexity",
    "apply_unitary",
    "born_distribution",
    "build_algorithm",
    "build_relation",
    "check_fidelity_monotone",
    "closed_form_degrees",
    "collision_algorithm",
    "compute_bounds",
    "estimate_success",
    "fidelity",
    "fit_exponent",
    "generate_instance",
    "load_profile",
    "minimal_budget",
    "nonadaptive_partition_algorithm",
    "pdqp_search_algorithm",
    "reduced_density_matrix",
    "run_cbqp",
    "run_direct",
    "run_purified",
    "sample_transcripts",
    "total_variation",
    "transcript_distribution",
    "validate_weight_scheme",
    "verify_all",
    "verify_hybrid_bound",
    "verify_lifted_weights",
    "verify_polynomial_inequality",
    "verify_weight_identity",
]
