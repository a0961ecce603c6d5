#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edhorizon/core.hpp"

namespace edhorizon {

enum class ModelFamily { linear, svr, forest, baseline };

const char* to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

/// Hyperparameters for one fit. Only the fields of the active family are
/// meaningful.
struct ModelSpec {
    ModelFamily family = ModelFamily::linear;
    double C = 1.0;          // svr
    double epsilon = 0.1;    // svr
    double gamma = 0.0;      // svr; 0 with gamma_auto = scale default
    bool gamma_auto = true;  // svr: gamma = 1 / (p * var(X_std))
    int max_depth = 10;      // forest
    int n_trees = 100;       // forest
    std::uint64_t seed = 0;
};

/// Per-feature training mean/stddev. Constant features (stddev 0) map to 0.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    bool identity = false; ///< forests consume raw features

    double apply_one(double x, std::size_t j) const {
        if (identity) return x;
        return stddev[j] > 0.0 ? (x - mean[j]) / stddev[j] : 0.0;
    }
    std::vector<double> apply(std::span<const double> row) const;
};

Standardization fit_standardization(const Matrix& X);
Matrix apply_standardization(const Matrix& X, const Standardization& s);

struct LinearModel {
    std::vector<double> weights; ///< in standardized feature space
    double intercept = 0.0;
};

struct SvrModel {
    Matrix support_points;     ///< standardized training rows with beta != 0
    std::vector<double> beta;  ///< alpha - alpha*, one per support point
    double bias = 0.0;
    double gamma = 0.0;
};

/// Flat CART node; leaf iff feature < 0.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct ForestModel {
    std::vector<std::vector<TreeNode>> trees;
    std::vector<double> importance_raw; ///< summed SSE decrease per feature
};

struct BaselineModel {
    double mean = 0.0;
};

struct TrainedPredictor {
    ModelFamily family = ModelFamily::baseline;
    ModelSpec spec;
    Standardization standardization;
    std::variant<LinearModel, SvrModel, ForestModel, BaselineModel> params;
    std::vector<std::string> feature_names;
    std::string fold_id;
    std::string horizon_label;
    bool convergence_warning = false;

    double predict_row(std::span<const double> features) const;
    std::vector<double> predict(const Matrix& X) const;
};

/// Ordinary least squares on standardized features with intercept. A
/// rank-deficient normal system gets ridge jitter 1e-8 on the diagonal.
TrainedPredictor fit_ols(const Matrix& X, const std::vector<double>& y);

/// Raw dual state of an SVR fit, for independent KKT verification.
struct SvrDiagnostics {
    std::vector<double> beta; ///< alpha - alpha* for every training row
    double bias = 0.0;
    double kkt_gap = 0.0; ///< b_lo - b_hi at exit; <= 2*tol when converged
    std::size_t pair_updates = 0;
};

/// Epsilon-insensitive SVR in the dual with an RBF kernel, solved by
/// pairwise coordinate optimization to KKT tolerance 1e-3 with an
/// iteration cap of 10*n passes. Non-convergence returns the best iterate
/// with convergence_warning set.
TrainedPredictor fit_svr(const Matrix& X, const std::vector<double>& y, const ModelSpec& spec,
                         SvrDiagnostics* diagnostics = nullptr);

/// Deterministic CART regression tree over the given row multiset: splits
/// by variance reduction over all features with midpoint thresholds, leaf =
/// mean, min leaf size 1. The result depends only on the multiset, not on
/// row order. Split SSE decreases accumulate into `importance` per feature.
std::vector<TreeNode> fit_cart_tree(const Matrix& X, const std::vector<double>& y,
                                    std::vector<std::size_t> rows, int max_depth,
                                    std::vector<double>& importance);

/// Bagged CART regression trees: seeded bootstrap per tree, variance-
/// reduction splits over all features, midpoint thresholds, leaf = mean,
/// min leaf size 1.
TrainedPredictor fit_forest(const Matrix& X, const std::vector<double>& y, const ModelSpec& spec);

/// Predicts the training mean everywhere.
TrainedPredictor fit_baseline(const std::vector<double>& y);

/// Fits one family with its spec already resolved (no grid).
TrainedPredictor fit_family(ModelFamily family, const Matrix& X, const std::vector<double>& y,
                            const ModelSpec& spec);

/// Hyperparameter grids; defaults follow the reference experiment setup.
struct Grids {
    std::vector<double> svr_C{0.1, 1.0, 10.0, 50.0, 100.0};
    std::vector<double> svr_epsilon{0.01, 0.1, 1.0};
    std::vector<int> forest_depth{2, 5, 10, 12, 15};
    int forest_trees = 100;
    bool svr_gamma_auto = true;
    double svr_gamma = 0.0;

    std::vector<ModelSpec> enumerate(ModelFamily family, std::uint64_t seed) const;
};

enum class GridSelection { nested, paper_mode };

GridSelection grid_selection_from_string(const std::string& s);
const char* to_string(GridSelection s);

struct GridSearchResult {
    ModelSpec best_spec;
    TrainedPredictor predictor;
    double best_score = 0.0; ///< inner-CV mean RMSE (nested) or test RMSE (paper_mode)
};

/// nested: inner 5-fold CV on the training data picks the spec with the
/// lowest mean RMSE, then refits on all training rows. paper_mode scores
/// every spec on the supplied outer test fold and keeps the best
/// (reproduces test-set selection; the leakage is documented in reports).
GridSearchResult grid_search(ModelFamily family, const Matrix& X, const std::vector<double>& y,
                             const Grids& grids, GridSelection selection, std::uint64_t seed,
                             const Matrix* X_test = nullptr,
                             const std::vector<double>* y_test = nullptr);

/// Mean decrease in split variance per feature, summed over trees and
/// normalized to total 1. Requires a forest predictor.
std::vector<double> rf_feature_importance(const TrainedPredictor& predictor);

std::string predictor_to_json(const TrainedPredictor& p);
TrainedPredictor predictor_from_json(const std::string& json_text);

} // namespace edhorizon
