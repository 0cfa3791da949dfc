"""Desk-scale simulator for sampling-tree quantum recommendation systems."""

__version__ = "0.1.0"

from .errors import (
    BoundVacuousError,
    ColdStartError,
    EmptyRowError,
    MatrixError,
    ProjectionEmptyError,
    QrecsimError,
    RegisterCapError,
    StoreFormatError,
)
from .linalg import (
    SvdFactorization,
    project_threshold,
    project_threshold_family,
    pseudo_project_row,
    svd,
    truncate_top_k,
)
from .qproject import (
    ProjectionOutcome,
    ProjectionParams,
    expected_iterations,
    success_probability,
    threshold_project,
)
from .qsim import (
    PhaseGrid,
    QuantumState,
    SveOutput,
    WalkOperator,
    eigenphases,
    phase_estimation,
    prepare_vector_state,
    sve,
)
from .recsys import (
    RecommendContext,
    bad_sample_bound,
    generate_T,
    quantum_typical_user_bound,
    recommend,
    typical_set,
    typical_user_bound,
    w_statistic,
)
from .rng import default_seed, stream
from .store import MatrixStore, RowTree, ingest_triplets, parse_triplets
from .subsample import (
    SubsampleParams,
    ThresholdParams,
    bound_threshold_error,
    bound_threshold_family_error,
    derive_params,
    subsample,
)

__all__ = [
    "BoundVacuousError",
    "ColdStartError",
    "EmptyRowError",
    "MatrixError",
    "MatrixStore",
    "PhaseGrid",
    "ProjectionEmptyError",
    "ProjectionOutcome",
    "ProjectionParams",
    "QrecsimError",
    "QuantumState",
    "RecommendContext",
    "RegisterCapError",
    "RowTree",
    "StoreFormatError",
    "SubsampleParams",
    "SvdFactorization",
    "SveOutput",
    "ThresholdParams",
    "WalkOperator",
    "bad_sample_bound",
    "bound_threshold_error",
    "bound_threshold_family_error",
    "default_seed",
    "derive_params",
    "eigenphases",
    "expected_iterations",
    "generate_T",
    "ingest_triplets",
    "parse_triplets",
    "phase_estimation",
    "prepare_vector_state",
    "project_threshold",
    "project_threshold_family",
    "pseudo_project_row",
    "quantum_typical_user_bound",
    "recommend",
    "stream",
    "success_probability",
    "sve",
    "svd",
    "threshold_project",
    "truncate_top_k",
    "typical_set",
    "typical_user_bound",
    "w_statistic",
]
