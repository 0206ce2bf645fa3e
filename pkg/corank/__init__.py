# flake8: noqa
from corank.anticoncentration import (
    LOEstimate,
    cofactor_grid,
    estimate_linear_lo,
    estimate_quadratic_lo,
    exact_linear_hit_probability,
    exact_quadratic_hit_probability,
    quadratic_q_parameter,
)
from corank.config import ExperimentConfig, load_config
from corank.errors import (
    CapacityError,
    CorankError,
    EmptyInputError,
    HypothesisViolationError,
    ParameterError,
    ParseError,
    SamplingError,
    StructuralFailureError,
    UsageError,
)
from corank.experiments import (
    ExperimentRunner,
    run_campaign,
    run_coupon_threshold,
    run_dependency_classification,
    run_diagonal_pairing,
    run_dregular_singularity,
    run_exposure_process,
    run_linear_lo,
    run_nonsymmetric_singularity,
    run_quadratic_lo,
    run_rank_agreement,
    run_saturation,
)
from corank.field import PrimeField, RationalField
from corank.graph import (
    Graph,
    brute_force_combinatorial_rank,
    combinatorial_rank,
    graph_of,
    is_non_expanding,
    min_deficiency_witness,
    neighborhood,
)
from corank.logger import Logger
from corank.matrix import (
    SparseMatrix,
    SparseSymMatrix,
    WeightMatrix,
    apply_mask,
    bernoulli_mask,
    random_weights,
    sparsify,
    sparsify_general,
    with_zero_diagonal,
)
from corank.predicates import (
    GoodnessParams,
    TriState,
    is_good,
    is_locally_sparse,
    is_nearly_nice,
    is_nice,
    is_normal_pair,
    is_small_set_expander,
    is_well_separated,
)
from corank.rank import exact_rank, rank_rational_oracle
from corank.records import TrialRecord
from corank.structure import (
    build_decomposition,
    circuits,
    classify_dependencies,
    is_saturated,
    is_unobstructed,
    largest_unobstructed_size,
    minimal_non_expanding_sets,
    predicted_rank_structural,
)
