"""Robust generalized score matching for exponential-family graphical models."""

__version__ = "0.1.0"

from .models import (  # noqa: F401
    DomainSpec,
    Family,
    PairwiseModel,
    Support,
    log_density_unnorm,
    pack_params,
    param_count,
    sample,
    sample_gaussian,
    sample_sqr_gibbs,
    stat_partials,
    unpack_params,
    weight_h,
)
from .scorestats import (  # noqa: F401
    ScoreStats,
    empirical_moments,
    g_of_x,
    gamma_mean,
    gamma_of_x,
    score_stats,
    sm_objective,
)
from .gmom import (  # noqa: F401
    ConcentrationParams,
    GmomConfig,
    RemainderPolicy,
    block_means,
    concentration_params,
    concentration_radius,
    geometric_median,
    gmom,
    gmom_stats,
)
from .estimator import (  # noqa: F401
    EstimatorConfig,
    EstimatorResult,
    beta_upper_bound,
    choose_K,
    irrep_diagnostics,
    lambda_path,
    regularized_robust_sm,
    robust_sm,
)
from .contamination import ContaminationKind, ContaminationSpec, contaminate  # noqa: F401
from .simulate import ExperimentSpec, random_model, robust_moments, run_experiment  # noqa: F401
from .evaluation import (  # noqa: F401
    RocCurve,
    average_roc,
    forbidden_edge_fdr,
    mse_vs_k,
    roc_from_path,
    support_metrics,
)
from .ingest import Dataset, MissingPolicy, fit, load_csv  # noqa: F401
