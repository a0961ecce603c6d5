"""Short-horizon student outcome prediction pipeline (C++ core bindings)."""

from ._core import (
    ClockedTrajectory,
    EventRecord,
    PipelineError,
    PopulationTimeStats,
    Predictor,
    ProblemInstance,
    SessionSpan,
    Trajectory,
    below_median_labels,
    build_usage_clock,
    chi2_statistic,
    compute_metrics,
    compute_population_time_stats,
    expert_feature_names,
    extract_expert_features,
    fit,
    generate_cohort_files,
    kfold_assign,
    mine_top_patterns,
    normalize_outcomes,
    parse_event_log,
    pattern_indicator_features,
    rf_feature_importance,
    run_experiment,
    segment_problems,
    sessionize,
    tokenize_trajectory,
    truncate_to_horizon,
)

__version__ = "0.1.0"

__all__ = [
    "ClockedTrajectory",
    "EventRecord",
    "PipelineError",
    "PopulationTimeStats",
    "Predictor",
    "ProblemInstance",
    "SessionSpan",
    "Trajectory",
    "below_median_labels",
    "build_usage_clock",
    "chi2_statistic",
    "compute_metrics",
    "compute_population_time_stats",
    "expert_feature_names",
    "extract_expert_features",
    "fit",
    "generate_cohort_files",
    "kfold_assign",
    "mine_top_patterns",
    "normalize_outcomes",
    "parse_event_log",
    "pattern_indicator_features",
    "rf_feature_importance",
    "run_experiment",
    "segment_problems",
    "sessionize",
    "tokenize_trajectory",
    "truncate_to_horizon",
]
