#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edhorizon/config.hpp"
#include "edhorizon/features.hpp"
#include "edhorizon/models.hpp"
#include "edhorizon/patterns.hpp"
#include "edhorizon/types.hpp"

namespace edhorizon {

struct FoldPlan {
    int k = 5;
    std::uint64_t seed = 0;
    std::map<std::string, int> assignment; ///< student_id -> fold index
};

/// Seeded shuffle then round-robin; fold sizes differ by at most 1.
FoldPlan kfold_assign(std::vector<std::string> student_ids, int k, std::uint64_t seed);

struct NormalizationInfo {
    double min = 0.0;
    double max = 1.0;
};

/// Min-max scaling with dataset-global extrema; all-equal scores are a
/// degenerate target and fatal.
std::vector<double> normalize_outcomes(const std::vector<double>& raw, NormalizationInfo* info = nullptr);

struct Metrics {
    double rmse = 0.0;
    double r2 = 0.0;     ///< squared Pearson correlation (the reported R^2)
    double r2_cod = 0.0; ///< coefficient of determination, kept distinct
};

/// rmse and squared-Pearson r2; zero variance on either side gives r2 = 0.
Metrics compute_metrics(std::span<const double> pred, std::span<const double> actual);

struct QuintileConfusion {
    std::array<std::array<int, 5>, 5> matrix{}; ///< [predicted][actual]
    std::array<double, 5> precision{};          ///< diagonal / predicted row, 0/0 -> 0
    std::array<double, 4> cuts{};               ///< 20/40/60/80th training percentiles

    int total() const;
};

/// Bins predictions and actuals with cut points interpolated from the
/// training-fold actual scores (left-closed bins).
QuintileConfusion quintile_confusion(std::span<const double> pred, std::span<const double> actual,
                                     std::span<const double> training_actuals);

std::array<double, 4> quintile_cuts(std::span<const double> training_actuals);
int quintile_bin(double value, const std::array<double, 4>& cuts);

struct OnTrackConfusion {
    // Positive class is "not on track" (achievement level 1-2).
    int true_not_on_track = 0;  ///< predicted and actual not on track
    int false_not_on_track = 0; ///< predicted not on track, actually on track
    int missed_not_on_track = 0; ///< predicted on track, actually not
    int true_on_track = 0;
    double precision = 0.0;
    double recall = 0.0;

    int misclassified() const { return false_not_on_track + missed_not_on_track; }
};

/// Maps predicted scores to achievement levels via the monotone level cuts
/// (level = 1 + number of cuts <= score); on track means level >= 3.
OnTrackConfusion on_track_confusion(std::span<const double> predicted_scores,
                                    std::span<const int> actual_levels,
                                    const std::vector<double>& level_cuts);

int level_from_score(double score, const std::vector<double>& level_cuts);

/// Per-fold split of one horizon's data. Trajectories are already truncated
/// to the base horizon; horizon_s_* carries the per-student persistence
/// sentinel (hours x 3600, or the student's total active seconds at FULL).
struct FoldData {
    std::vector<Trajectory> train_trajectories;
    std::vector<Trajectory> test_trajectories;
    std::vector<double> horizon_s_train;
    std::vector<double> horizon_s_test;
    std::vector<double> y_train;
    std::vector<double> y_test;
    std::vector<std::optional<double>> pretest_train;
    std::vector<std::optional<double>> pretest_test;
    std::vector<int> levels_test; ///< -1 when absent
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

/// Training-fold-derived log-feature artifacts for one (horizon, fold):
/// time stats, mined patterns, and the 16+P design matrices. Everything
/// here is a function of the training fold only (plus the frozen config).
struct FoldFeatures {
    PopulationTimeStats stats;
    std::vector<PatternSpec> patterns;
    Matrix X_train; ///< 16 expert columns + one per selected pattern
    Matrix X_test;
    std::vector<std::string> feature_names;
};

FoldFeatures build_fold_features(const FoldData& fold, double min_support,
                                 std::size_t max_patterns, double alpha,
                                 const std::string& source_tag);

struct DesignMatrices {
    Matrix X_train;
    Matrix X_test;
    std::vector<std::string> names;
};

/// Selects the columns a feature-set label asks for; log_features may be
/// null for pretest-only sets.
DesignMatrices assemble_design(const FoldFeatures* log_features, const FoldData& fold,
                               const FeatureSetSpec& fs);

struct CellResult {
    std::string horizon_label;
    ModelFamily family = ModelFamily::baseline;
    std::string feature_set;
    std::vector<Metrics> fold_metrics;
    double rmse_mean = 0.0, rmse_se = 0.0;
    double r2_mean = 0.0, r2_se = 0.0;
    double r2_cod_mean = 0.0, r2_cod_se = 0.0;
    QuintileConfusion quintile; ///< summed over folds, precision recomputed
    std::optional<OnTrackConfusion> on_track;
    std::vector<std::string> feature_names;
    std::vector<double> importance; ///< forest cells: fold-averaged, sums to 1
    std::vector<ModelSpec> chosen_specs; ///< per fold
    bool convergence_warning = false;
};

/// Input resolution shared by the CLI stages: parses the configured files
/// or generates the synthetic cohort.
struct LoadedCohort {
    std::vector<Trajectory> trajectories;
    std::map<std::string, OutcomeRecord> outcomes;
    ParseTally event_tally;
    ParseTally outcome_tally;
};

LoadedCohort load_input(const PipelineConfig& config);

struct ExperimentResult {
    std::vector<CellResult> cells;
    NormalizationInfo normalization;
    FoldPlan folds;
    std::size_t n_students = 0;
    double runtime_s = 0.0;
    std::string manifest_json;
    std::vector<std::string> written_files;
};

/// Full cross-validated run over horizons x families x feature sets; when
/// write_outputs is set, report CSVs, pattern JSON and the manifest land in
/// config.output_dir.
ExperimentResult run_experiment(const PipelineConfig& config, bool write_outputs = true);

} // namespace edhorizon
