"""Debiased-Lasso inference for high-dimensional, possibly misspecified
Cox-type working models."""

from .data import RiskMoments, SurvivalDataset, load_csv, new_dataset, risk_moments
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DivergenceError,
    HdcoxError,
    NoEventsError,
    NonFiniteError,
    NonPositiveTimeError,
    PrecisionError,
    ScenarioError,
    SchemaError,
    SolverError,
)
from .inference import (
    InferenceReport,
    ScoreResiduals,
    confidence_intervals,
    desparsify,
    holm_adjust,
    model_variance,
    robust_variance,
    score_residuals,
    write_report_csv,
    write_report_jsonl,
)
from .lasso import (
    CvResult,
    LassoFit,
    cross_validate,
    default_grid,
    fit_lasso,
    lambda_max,
    regularization_path,
)
from .nodewise import (
    PrecisionSurrogate,
    build_precision,
    cv_nodewise,
    default_lambdas,
    nodewise_regression,
    tau_squared,
)
from .partial_likelihood import (
    PartialLikelihoodEval,
    evaluate,
    gradient,
    hessian,
    hessian_via_factor,
    neg_log_partial_likelihood,
    risk_set_weights,
)
from .pipeline import PipelineResult, fit_and_infer
from .simulation import (
    CoverageReport,
    ScenarioSpec,
    VarianceStats,
    build_covariance,
    calibrate_censoring,
    generate_survival,
    load_scenario,
    pseudo_true_oracle,
    run_replications,
    sample_design,
    write_coverage_csv,
)

__version__ = "0.1.0"
