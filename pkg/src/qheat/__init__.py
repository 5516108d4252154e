"""Heat transfer operators of quantum channels: computation, synthesis and admissibility checks."""

from .analysis import (
    AdmissibilityVerdict,
    HeatTransferMatrix,
    Verdict,
    check_lep,
    decide_complete_erasure_hto,
    decide_extremal_hto,
    decide_landauer_hto,
    et_family_study,
    extract_heat_matrix,
    lift_extremal_realization,
    strong_subadditivity_corollary_check,
    widen_heat_matrix,
)
from .channels import (
    ChoiMatrix,
    KrausChannel,
    apply,
    channel_distance,
    complete_erasure,
    convex_combine,
    et_channel,
    from_choi,
    is_extremal,
    to_choi,
)
from .errors import (
    ConsistencyError,
    ContractError,
    InadmissibleHTO,
    InvariantError,
    QHeatError,
    TruncationError,
    UnsupportedDecision,
)
from .operators import (
    DensityMatrix,
    HermitianOperator,
    Isometry,
    Units,
    gibbs_state,
    j_function,
    minimizer_sigma,
    partial_trace,
    relative_entropy,
    tensor,
    von_neumann_entropy,
)
from .realizations import (
    DenseRealization,
    HeatReport,
    add_heat_rider,
    average_heat,
    compute_hto,
    controller_combine,
    induced_channel,
    total_work,
)
from .synthesis import (
    ChainRealization,
    dense_oracle_check,
    design_min_heat_erasure,
    structured_heat_accounting,
    swap_equality_case,
    synthesize_complete_erasure,
    synthesize_landauer,
)

__version__ = "0.1.0"
