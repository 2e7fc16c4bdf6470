"""Low-rank matrix recovery via singular value projection.

Projected gradient descent onto the rank-k set for affine rank
minimization and matrix completion, with SVT and ALS baselines,
incoherence/isometry diagnostics, and a reproducible experiment harness.
"""

__version__ = "0.1.0"

from .linalg import (
    EntrySet,
    LowRankFactorization,
    StructuredOperand,
    frobenius_norm,
    full_svd,
    project_rank_k,
    truncated_svd,
)
from .operators import (
    AffineMap,
    EntrySamplingMap,
    GaussianEnsemble,
    estimate_isometry_constant,
    gaussian_ensemble,
    sample_entries,
)
from .solver import (
    SolverConfig,
    SolveTrace,
    select_rank_armp,
    select_rank_completion,
    svp_complete,
    svp_solve,
    svp_solve_noisy,
)
from .baselines import AlsConfig, SvtConfig, als_solve, svt_solve
from .analysis import (
    check_concentration,
    check_rip_incoherent,
    incoherence,
    regularity,
)

__all__ = [
    "AffineMap",
    "AlsConfig",
    "EntrySamplingMap",
    "EntrySet",
    "GaussianEnsemble",
    "LowRankFactorization",
    "SolveTrace",
    "SolverConfig",
    "StructuredOperand",
    "SvtConfig",
    "als_solve",
    "check_concentration",
    "check_rip_incoherent",
    "estimate_isometry_constant",
    "frobenius_norm",
    "full_svd",
    "gaussian_ensemble",
    "incoherence",
    "project_rank_k",
    "regularity",
    "sample_entries",
    "select_rank_armp",
    "select_rank_completion",
    "svp_complete",
    "svp_solve",
    "svp_solve_noisy",
    "svt_solve",
    "truncated_svd",
]
