#include "edhorizon/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

namespace edhorizon {

const char* to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::linear: return "linear";
        case ModelFamily::svr: return "svr";
        case ModelFamily::forest: return "forest";
        default: return "baseline";
    }
}

ModelFamily model_family_from_string(const std::string& s) {
    if (s == "linear") return ModelFamily::linear;
    if (s == "svr") return ModelFamily::svr;
    if (s == "forest") return ModelFamily::forest;
    if (s == "baseline") return ModelFamily::baseline;
    throw PipelineError("unknown model family '" + s + "'");
}

GridSelection grid_selection_from_string(const std::string& s) {
    if (s == "nested") return GridSelection::nested;
    if (s == "paper_mode") return GridSelection::paper_mode;
    throw PipelineError("unknown grid selection mode '" + s + "'");
}

const char* to_string(GridSelection s) {
    return s == GridSelection::nested ? "nested" : "paper_mode";
}

std::vector<double> Standardization::apply(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = apply_one(row[j], j);
    return out;
}

Standardization fit_standardization(const Matrix& X) {
    Standardization s;
    s.mean.assign(X.cols, 0.0);
    s.stddev.assign(X.cols, 0.0);
    if (X.rows == 0) return s;
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) s.mean[j] += X(i, j);
    }
    for (std::size_t j = 0; j < X.cols; ++j) s.mean[j] /= static_cast<double>(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) {
            const double d = X(i, j) - s.mean[j];
            s.stddev[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < X.cols; ++j) {
        // A column whose values are all identical is constant regardless of
        // accumulated rounding; pin it so it standardizes to exact zeros.
        bool constant = true;
        for (std::size_t i = 1; i < X.rows && constant; ++i) {
            constant = X(i, j) == X(0, j);
        }
        if (constant) {
            s.mean[j] = X(0, j);
            s.stddev[j] = 0.0;
        } else {
            s.stddev[j] = std::sqrt(s.stddev[j] / static_cast<double>(X.rows));
        }
    }
    return s;
}

Matrix apply_standardization(const Matrix& X, const Standardization& s) {
    if (s.identity) return X;
    Matrix out(X.rows, X.cols);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) out(i, j) = s.apply_one(X(i, j), j);
    }
    return out;
}

namespace {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double sq = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        sq += d * d;
    }
    return std::exp(-gamma * sq);
}

double predict_tree(const std::vector<TreeNode>& tree, std::span<const double> x) {
    int node = 0;
    while (tree[node].feature >= 0) {
        node = x[static_cast<std::size_t>(tree[node].feature)] <= tree[node].threshold
                   ? tree[node].left
                   : tree[node].right;
    }
    return tree[node].value;
}

} // namespace

double TrainedPredictor::predict_row(std::span<const double> features) const {
    if (family == ModelFamily::baseline) return std::get<BaselineModel>(params).mean;

    if (family == ModelFamily::forest) {
        const auto& forest = std::get<ForestModel>(params);
        if (forest.trees.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& tree : forest.trees) sum += predict_tree(tree, features);
        return sum / static_cast<double>(forest.trees.size());
    }

    const std::vector<double> z = standardization.apply(features);
    if (family == ModelFamily::linear) {
        const auto& m = std::get<LinearModel>(params);
        double out = m.intercept;
        for (std::size_t j = 0; j < m.weights.size(); ++j) out += m.weights[j] * z[j];
        return out;
    }

    const auto& m = std::get<SvrModel>(params);
    double out = m.bias;
    for (std::size_t i = 0; i < m.support_points.rows; ++i) {
        out += m.beta[i] * rbf_kernel(std::span<const double>(m.support_points.row_ptr(i),
                                                              m.support_points.cols),
                                      z, m.gamma);
    }
    return out;
}

std::vector<double> TrainedPredictor::predict(const Matrix& X) const {
    std::vector<double> out;
    out.reserve(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        out.push_back(predict_row(std::span<const double>(X.row_ptr(i), X.cols)));
    }
    return out;
}

TrainedPredictor fit_baseline(const std::vector<double>& y) {
    if (y.empty()) throw PipelineError("baseline fit needs at least one target");
    TrainedPredictor p;
    p.family = ModelFamily::baseline;
    p.spec.family = ModelFamily::baseline;
    p.standardization.identity = true;
    p.params = BaselineModel{mean_of(y)};
    return p;
}

TrainedPredictor fit_family(ModelFamily family, const Matrix& X, const std::vector<double>& y,
                            const ModelSpec& spec) {
    switch (family) {
        case ModelFamily::linear: return fit_ols(X, y);
        case ModelFamily::svr: return fit_svr(X, y, spec);
        case ModelFamily::forest: return fit_forest(X, y, spec);
        default: return fit_baseline(y);
    }
}

std::vector<ModelSpec> Grids::enumerate(ModelFamily family, std::uint64_t seed) const {
    std::vector<ModelSpec> specs;
    ModelSpec base;
    base.family = family;
    base.seed = seed;
    switch (family) {
        case ModelFamily::svr:
            base.gamma_auto = svr_gamma_auto;
            base.gamma = svr_gamma;
            for (double c : svr_C) {
                for (double eps : svr_epsilon) {
                    ModelSpec s = base;
                    s.C = c;
                    s.epsilon = eps;
                    specs.push_back(s);
                }
            }
            break;
        case ModelFamily::forest:
            for (int depth : forest_depth) {
                ModelSpec s = base;
                s.max_depth = depth;
                s.n_trees = forest_trees;
                specs.push_back(s);
            }
            break;
        default:
            specs.push_back(base);
            break;
    }
    if (specs.empty()) throw PipelineError("hyperparameter grid is empty");
    return specs;
}

namespace {

double rmse_of(const std::vector<double>& pred, const std::vector<double>& actual) {
    double ss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(pred.size()));
}

// Seeded shuffle + round-robin over row indices; mirrors the student-level
// fold assignment but stays independent of it.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(seed, 0x5eedf01dULL));
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
    return folds;
}

} // namespace

GridSearchResult grid_search(ModelFamily family, const Matrix& X, const std::vector<double>& y,
                             const Grids& grids, GridSelection selection, std::uint64_t seed,
                             const Matrix* X_test, const std::vector<double>* y_test) {
    const auto specs = grids.enumerate(family, seed);

    GridSearchResult result;
    if (specs.size() == 1) {
        result.best_spec = specs[0];
        result.predictor = fit_family(family, X, y, specs[0]);
        result.best_score = 0.0;
        return result;
    }

    double best_score = std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;

    if (selection == GridSelection::paper_mode) {
        if (!X_test || !y_test)
            throw PipelineError("paper_mode grid search needs the outer test fold");
        std::vector<TrainedPredictor> fitted;
        fitted.reserve(specs.size());
        for (std::size_t s = 0; s < specs.size(); ++s) {
            fitted.push_back(fit_family(family, X, y, specs[s]));
            const double score = rmse_of(fitted.back().predict(*X_test), *y_test);
            if (score < best_score) {
                best_score = score;
                best_index = s;
            }
        }
        result.best_spec = specs[best_index];
        result.predictor = std::move(fitted[best_index]);
        result.best_score = best_score;
        return result;
    }

    // nested: inner k-fold CV on the training rows only.
    const std::size_t n = X.rows;
    if (n < 2) throw PipelineError("nested grid search needs at least 2 training rows");
    const std::size_t inner_k = std::min<std::size_t>(5, n);
    const auto folds = kfold_indices(n, inner_k, seed);

    for (std::size_t s = 0; s < specs.size(); ++s) {
        double score_sum = 0.0;
        for (std::size_t f = 0; f < inner_k; ++f) {
            std::vector<std::size_t> train_rows;
            for (std::size_t g = 0; g < inner_k; ++g) {
                if (g == f) continue;
                train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
            }
            const Matrix Xi = subset_rows(X, train_rows);
            const std::vector<double> yi = subset(y, train_rows);
            const Matrix Xv = subset_rows(X, folds[f]);
            const std::vector<double> yv = subset(y, folds[f]);
            const TrainedPredictor p = fit_family(family, Xi, yi, specs[s]);
            score_sum += rmse_of(p.predict(Xv), yv);
        }
        const double score = score_sum / static_cast<double>(inner_k);
        if (score < best_score) {
            best_score = score;
            best_index = s;
        }
    }

    result.best_spec = specs[best_index];
    result.predictor = fit_family(family, X, y, specs[best_index]);
    result.best_score = best_score;
    return result;
}

std::vector<double> rf_feature_importance(const TrainedPredictor& predictor) {
    if (predictor.family != ModelFamily::forest)
        throw PipelineError("feature importance requires a forest predictor");
    const auto& forest = std::get<ForestModel>(predictor.params);
    std::vector<double> importance = forest.importance_raw;
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (total > 0.0) {
        for (double& v : importance) v /= total;
    }
    return importance;
}

namespace {

using nlohmann::ordered_json;

ordered_json spec_to_json(const ModelSpec& s) {
    ordered_json j;
    j["family"] = to_string(s.family);
    j["C"] = s.C;
    j["epsilon"] = s.epsilon;
    j["gamma"] = s.gamma;
    j["gamma_auto"] = s.gamma_auto;
    j["max_depth"] = s.max_depth;
    j["n_trees"] = s.n_trees;
    j["seed"] = s.seed;
    return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.family = model_family_from_string(j.at("family").get<std::string>());
    s.C = j.at("C").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.gamma_auto = j.at("gamma_auto").get<bool>();
    s.max_depth = j.at("max_depth").get<int>();
    s.n_trees = j.at("n_trees").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

ordered_json matrix_to_json(const Matrix& m) {
    ordered_json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.data;
    return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    return m;
}

} // namespace

std::string predictor_to_json(const TrainedPredictor& p) {
    ordered_json j;
    j["format_version"] = 1;
    j["family"] = to_string(p.family);
    j["spec"] = spec_to_json(p.spec);
    j["standardization"] = {
        {"identity", p.standardization.identity},
        {"mean", p.standardization.mean},
        {"stddev", p.standardization.stddev},
    };
    j["feature_names"] = p.feature_names;
    j["fold_id"] = p.fold_id;
    j["horizon_label"] = p.horizon_label;
    j["convergence_warning"] = p.convergence_warning;

    ordered_json params;
    switch (p.family) {
        case ModelFamily::linear: {
            const auto& m = std::get<LinearModel>(p.params);
            params["weights"] = m.weights;
            params["intercept"] = m.intercept;
            break;
        }
        case ModelFamily::svr: {
            const auto& m = std::get<SvrModel>(p.params);
            params["support_points"] = matrix_to_json(m.support_points);
            params["beta"] = m.beta;
            params["bias"] = m.bias;
            params["gamma"] = m.gamma;
            break;
        }
        case ModelFamily::forest: {
            const auto& m = std::get<ForestModel>(p.params);
            ordered_json trees = ordered_json::array();
            for (const auto& tree : m.trees) {
                ordered_json nodes = ordered_json::array();
                for (const auto& node : tree) {
                    nodes.push_back({node.feature, node.threshold, node.left, node.right, node.value});
                }
                trees.push_back(nodes);
            }
            params["trees"] = trees;
            params["importance_raw"] = m.importance_raw;
            break;
        }
        default: {
            params["mean"] = std::get<BaselineModel>(p.params).mean;
            break;
        }
    }
    j["params"] = params;
    return j.dump(2);
}

TrainedPredictor predictor_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    if (j.at("format_version").get<int>() != 1)
        throw PipelineError("unsupported model file version");

    TrainedPredictor p;
    p.family = model_family_from_string(j.at("family").get<std::string>());
    p.spec = spec_from_json(j.at("spec"));
    p.standardization.identity = j.at("standardization").at("identity").get<bool>();
    p.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    p.standardization.stddev = j.at("standardization").at("stddev").get<std::vector<double>>();
    p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    p.fold_id = j.at("fold_id").get<std::string>();
    p.horizon_label = j.at("horizon_label").get<std::string>();
    p.convergence_warning = j.at("convergence_warning").get<bool>();

    const auto& params = j.at("params");
    switch (p.family) {
        case ModelFamily::linear: {
            LinearModel m;
            m.weights = params.at("weights").get<std::vector<double>>();
            m.intercept = params.at("intercept").get<double>();
            p.params = std::move(m);
            break;
        }
        case ModelFamily::svr: {
            SvrModel m;
            m.support_points = matrix_from_json(params.at("support_points"));
            m.beta = params.at("beta").get<std::vector<double>>();
            m.bias = params.at("bias").get<double>();
            m.gamma = params.at("gamma").get<double>();
            p.params = std::move(m);
            break;
        }
        case ModelFamily::forest: {
            ForestModel m;
            for (const auto& tree_json : params.at("trees")) {
                std::vector<TreeNode> tree;
                for (const auto& node_json : tree_json) {
                    TreeNode node;
                    node.feature = node_json.at(0).get<int>();
                    node.threshold = node_json.at(1).get<double>();
                    node.left = node_json.at(2).get<int>();
                    node.right = node_json.at(3).get<int>();
                    node.value = node_json.at(4).get<double>();
                    tree.push_back(node);
                }
                m.trees.push_back(std::move(tree));
            }
            m.importance_raw = params.at("importance_raw").get<std::vector<double>>();
            p.params = std::move(m);
            break;
        }
        default: {
            p.params = BaselineModel{params.at("mean").get<double>()};
            break;
        }
    }
    return p;
}

} // namespace edhorizon
