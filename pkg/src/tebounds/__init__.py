"""Sharp partial-identification bounds for treatment-effect parameters.

The package computes identified-set intervals for eleven treatment-effect
estimands when unconfoundedness is relaxed to bounded drift of the latent
treatment probability, parameterized either directly (latent-probability
bounds) or through odds ratios. Closed-form envelope CDFs drive all bounds;
a brute-force oracle certifies them on small instances.
"""

from ._version import __version__
from .envelopes import (
    ArmEnvelopes,
    Cell,
    CellEnvelopes,
    SwitchingScore,
    aggregate_cross_treated,
    aggregate_marginal,
    aggregate_observed_treated,
    compute_envelopes,
    envelope_mean_closed_forms,
    envelope_quantile,
    envelope_quantile_closed_form,
    switching_score,
)
from .errors import InputError, InternalError, OverlapError
from .estimands import (
    BoundInterval,
    ate_bounds,
    att_bounds,
    aww_bounds,
    cate_bounds,
    compute_estimand,
    cqte_bounds,
    dte_bounds,
    joint_cdf_bounds,
    qcate_bounds,
    qdte_bounds,
    qte_bounds,
    qtt_bounds,
    wate_bounds,
)
from .estimator import CDependenceSensitivity
from .oracle import (
    LatentScoreGrid,
    WitnessReport,
    attainable_cdf_profile,
    attainable_cdf_range,
    attainable_param_range,
    coupling_range,
    score_grid,
    verify_witness,
)
from .problem import (
    EstimandRequest,
    Problem,
    SensitivitySpec,
    cells_from_arrays,
    ingest_cell_summary_csv,
    ingest_micro_csv,
    load_config,
    problem_from_config,
    write_cell_summary,
)
from .report import Report, ReportRow, breakdown, run
from .sensitivity import (
    CellSensitivity,
    GmsmBounds,
    cdep_from_conditional_c,
    cdep_from_gmsm,
    gmsm_from_cdep,
    validate_sensitivity,
)
from .stepcdf import StepCdf, TruncatedMeans, mix, weighted_mixture

__all__ = [
    "__version__",
    "ArmEnvelopes",
    "BoundInterval",
    "CDependenceSensitivity",
    "Cell",
    "CellEnvelopes",
    "CellSensitivity",
    "EstimandRequest",
    "GmsmBounds",
    "InputError",
    "InternalError",
    "LatentScoreGrid",
    "OverlapError",
    "Problem",
    "Report",
    "ReportRow",
    "SensitivitySpec",
    "StepCdf",
    "SwitchingScore",
    "TruncatedMeans",
    "WitnessReport",
    "aggregate_cross_treated",
    "aggregate_marginal",
    "aggregate_observed_treated",
    "ate_bounds",
    "att_bounds",
    "attainable_cdf_profile",
    "attainable_cdf_range",
    "attainable_param_range",
    "aww_bounds",
    "breakdown",
    "cate_bounds",
    "cdep_from_conditional_c",
    "cdep_from_gmsm",
    "cells_from_arrays",
    "compute_envelopes",
    "compute_estimand",
    "coupling_range",
    "cqte_bounds",
    "dte_bounds",
    "envelope_mean_closed_forms",
    "envelope_quantile",
    "envelope_quantile_closed_form",
    "gmsm_from_cdep",
    "ingest_cell_summary_csv",
    "ingest_micro_csv",
    "joint_cdf_bounds",
    "load_config",
    "mix",
    "problem_from_config",
    "qcate_bounds",
    "qdte_bounds",
    "qte_bounds",
    "qtt_bounds",
    "run",
    "score_grid",
    "switching_score",
    "validate_sensitivity",
    "verify_witness",
    "wate_bounds",
    "weighted_mixture",
    "write_cell_summary",
]
