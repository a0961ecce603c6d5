#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "edhorizon/models.hpp"

namespace edhorizon {

namespace {

struct TreeBuilder {
    const Matrix& X;
    const std::vector<double>& y;
    int max_depth;
    std::vector<TreeNode> nodes;
    std::vector<double>& importance; // shared across the forest

    struct Stats {
        double sum = 0.0;
        double sumsq = 0.0;
        std::size_t count = 0;

        double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
        double sse() const {
            if (!count) return 0.0;
            return std::max(0.0, sumsq - sum * sum / static_cast<double>(count));
        }
    };

    Stats stats_of(const std::vector<std::size_t>& rows) const {
        Stats s;
        for (std::size_t r : rows) {
            s.sum += y[r];
            s.sumsq += y[r] * y[r];
        }
        s.count = rows.size();
        return s;
    }

    int build(std::vector<std::size_t>& rows, int depth) {
        const Stats node_stats = stats_of(rows);
        const int node_index = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{});
        nodes[node_index].value = node_stats.mean();

        if (depth >= max_depth || rows.size() < 2 || node_stats.sse() <= 1e-24) return node_index;

        // Exhaustive variance-reduction search over all features; midpoint
        // thresholds between consecutive distinct values.
        double best_score = std::numeric_limits<double>::infinity();
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, std::size_t>> order(rows.size());
        for (std::size_t f = 0; f < X.cols; ++f) {
            for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {X(rows[i], f), rows[i]};
            std::sort(order.begin(), order.end());
            if (order.front().first == order.back().first) continue;

            double sum_left = 0.0, sumsq_left = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const double yi = y[order[i].second];
                sum_left += yi;
                sumsq_left += yi * yi;
                if (order[i].first == order[i + 1].first) continue;
                const auto n_left = static_cast<double>(i + 1);
                const auto n_right = static_cast<double>(order.size() - i - 1);
                const double sum_right = node_stats.sum - sum_left;
                const double sumsq_right = node_stats.sumsq - sumsq_left;
                const double sse_left = std::max(0.0, sumsq_left - sum_left * sum_left / n_left);
                const double sse_right =
                    std::max(0.0, sumsq_right - sum_right * sum_right / n_right);
                const double score = sse_left + sse_right;
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (order[i].first + order[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return node_index;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows
                                                                            : right_rows)
                .push_back(r);
        }
        if (left_rows.empty() || right_rows.empty()) return node_index; // numeric edge

        importance[static_cast<std::size_t>(best_feature)] += node_stats.sse() - best_score;
        rows.clear();
        rows.shrink_to_fit();

        nodes[node_index].feature = best_feature;
        nodes[node_index].threshold = best_threshold;
        const int left = build(left_rows, depth + 1);
        nodes[node_index].left = left;
        const int right = build(right_rows, depth + 1);
        nodes[node_index].right = right;
        return node_index;
    }
};

} // namespace

std::vector<TreeNode> fit_cart_tree(const Matrix& X, const std::vector<double>& y,
                                    std::vector<std::size_t> rows, int max_depth,
                                    std::vector<double>& importance) {
    if (importance.size() != X.cols) importance.assign(X.cols, 0.0);
    // Canonical row order makes every accumulation independent of how the
    // multiset was presented.
    std::sort(rows.begin(), rows.end());
    TreeBuilder builder{X, y, max_depth, {}, importance};
    builder.build(rows, 0);
    return std::move(builder.nodes);
}

TrainedPredictor fit_forest(const Matrix& X, const std::vector<double>& y, const ModelSpec& spec) {
    if (X.rows == 0 || X.rows != y.size())
        throw PipelineError("forest fit needs matching rows and targets");
    if (spec.n_trees < 1 || spec.max_depth < 1)
        throw PipelineError("forest needs n_trees >= 1 and max_depth >= 1");

    TrainedPredictor out;
    out.family = ModelFamily::forest;
    out.spec = spec;
    out.standardization.identity = true; // forests consume raw features

    ForestModel model;
    model.importance_raw.assign(X.cols, 0.0);
    model.trees.reserve(static_cast<std::size_t>(spec.n_trees));

    const std::size_t n = X.rows;
    for (int t = 0; t < spec.n_trees; ++t) {
        // Per-tree stream keyed by tree index, so results do not depend on
        // scheduling or training-row order of other trees.
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = rng.below(n);

        model.trees.push_back(fit_cart_tree(X, y, std::move(rows), spec.max_depth,
                                            model.importance_raw));
    }

    out.params = std::move(model);
    return out;
}

} // namespace edhorizon
