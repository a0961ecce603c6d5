#include "edhorizon/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "edhorizon/core.hpp"
#include "edhorizon/horizon.hpp"
#include "edhorizon/ingest.hpp"
#include "edhorizon/synthgen.hpp"

namespace edhorizon {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

FoldPlan kfold_assign(std::vector<std::string> student_ids, int k, std::uint64_t seed) {
    if (k < 2) throw PipelineError("k-fold needs k >= 2");
    if (student_ids.size() < static_cast<std::size_t>(k))
        throw PipelineError("k-fold needs at least k students");

    std::sort(student_ids.begin(), student_ids.end());
    Rng rng(mix_seed(seed, 0xf01d5ULL));
    rng.shuffle(student_ids);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (std::size_t i = 0; i < student_ids.size(); ++i) {
        plan.assignment[student_ids[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return plan;
}

std::vector<double> normalize_outcomes(const std::vector<double>& raw, NormalizationInfo* info) {
    if (raw.size() < 2) throw PipelineError("outcome normalization needs at least 2 scores");
    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (!(mx > mn)) throw PipelineError("all outcome scores are equal; degenerate target");
    if (info) *info = NormalizationInfo{mn, mx};
    std::vector<double> out;
    out.reserve(raw.size());
    for (double v : raw) out.push_back((v - mn) / (mx - mn));
    return out;
}

Metrics compute_metrics(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size() || pred.empty())
        throw PipelineError("metric computation needs equal non-empty vectors");
    const auto n = static_cast<double>(pred.size());

    double ss_err = 0.0;
    double mp = 0.0, ma = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        ss_err += d * d;
        mp += pred[i];
        ma += actual[i];
    }
    mp /= n;
    ma /= n;

    double cov = 0.0, vp = 0.0, va = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dp = pred[i] - mp;
        const double da = actual[i] - ma;
        cov += dp * da;
        vp += dp * dp;
        va += da * da;
    }
    // Constant vectors have zero variance by definition; detect that
    // structurally so a constant predictor reports exactly 0.
    const bool pred_constant =
        std::all_of(pred.begin(), pred.end(), [&](double v) { return v == pred[0]; });
    const bool actual_constant =
        std::all_of(actual.begin(), actual.end(), [&](double v) { return v == actual[0]; });

    Metrics m;
    m.rmse = std::sqrt(ss_err / n);
    m.r2 = (!pred_constant && !actual_constant && vp > 0.0 && va > 0.0)
               ? std::min(1.0, (cov * cov) / (vp * va))
               : 0.0;
    m.r2_cod = (!actual_constant && va > 0.0) ? 1.0 - ss_err / va : 0.0;
    return m;
}

std::array<double, 4> quintile_cuts(std::span<const double> training_actuals) {
    if (training_actuals.size() < 2)
        throw PipelineError("quintile cuts need at least 2 training scores");
    std::vector<double> sorted(training_actuals.begin(), training_actuals.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw PipelineError("quintile cuts need non-degenerate training scores");

    std::array<double, 4> cuts{};
    const double qs[4] = {0.2, 0.4, 0.6, 0.8};
    const auto n = sorted.size();
    for (int i = 0; i < 4; ++i) {
        const double pos = qs[i] * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        const std::size_t hi = std::min(lo + 1, n - 1);
        cuts[static_cast<std::size_t>(i)] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    }
    return cuts;
}

int quintile_bin(double value, const std::array<double, 4>& cuts) {
    int bin = 0;
    for (double c : cuts) {
        if (value >= c) ++bin; // left-closed bins
    }
    return bin;
}

int QuintileConfusion::total() const {
    int t = 0;
    for (const auto& row : matrix) {
        for (int v : row) t += v;
    }
    return t;
}

QuintileConfusion quintile_confusion(std::span<const double> pred, std::span<const double> actual,
                                     std::span<const double> training_actuals) {
    if (pred.size() != actual.size())
        throw PipelineError("quintile confusion needs equal-length vectors");
    QuintileConfusion result;
    result.cuts = quintile_cuts(training_actuals);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int pb = quintile_bin(pred[i], result.cuts);
        const int ab = quintile_bin(actual[i], result.cuts);
        result.matrix[static_cast<std::size_t>(pb)][static_cast<std::size_t>(ab)] += 1;
    }
    for (int q = 0; q < 5; ++q) {
        int row_total = 0;
        for (int a = 0; a < 5; ++a) row_total += result.matrix[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
        result.precision[static_cast<std::size_t>(q)] =
            row_total > 0
                ? static_cast<double>(result.matrix[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)]) /
                      static_cast<double>(row_total)
                : 0.0;
    }
    return result;
}

int level_from_score(double score, const std::vector<double>& level_cuts) {
    int level = 1;
    for (double c : level_cuts) {
        if (score >= c) ++level;
    }
    return level;
}

OnTrackConfusion on_track_confusion(std::span<const double> predicted_scores,
                                    std::span<const int> actual_levels,
                                    const std::vector<double>& level_cuts) {
    if (predicted_scores.size() != actual_levels.size())
        throw PipelineError("on-track confusion needs equal-length vectors");
    OnTrackConfusion c;
    for (std::size_t i = 0; i < predicted_scores.size(); ++i) {
        const bool pred_on_track = level_from_score(predicted_scores[i], level_cuts) >= 3;
        const bool actual_on_track = actual_levels[i] >= 3;
        if (!pred_on_track && !actual_on_track) ++c.true_not_on_track;
        else if (!pred_on_track && actual_on_track) ++c.false_not_on_track;
        else if (pred_on_track && !actual_on_track) ++c.missed_not_on_track;
        else ++c.true_on_track;
    }
    const int predicted_positive = c.true_not_on_track + c.false_not_on_track;
    const int actual_positive = c.true_not_on_track + c.missed_not_on_track;
    c.precision = predicted_positive > 0
                      ? static_cast<double>(c.true_not_on_track) / predicted_positive
                      : 0.0;
    c.recall = actual_positive > 0 ? static_cast<double>(c.true_not_on_track) / actual_positive
                                   : 0.0;
    return c;
}

FoldFeatures build_fold_features(const FoldData& fold, double min_support,
                                 std::size_t max_patterns, double alpha,
                                 const std::string& source_tag) {
    FoldFeatures out;
    out.stats = compute_population_time_stats(fold.train_trajectories, source_tag);

    std::vector<std::vector<Token>> train_tokens;
    train_tokens.reserve(fold.train_trajectories.size());
    for (const auto& traj : fold.train_trajectories) {
        train_tokens.push_back(tokenize_trajectory(traj, out.stats));
    }
    const auto labels = below_median_labels(fold.y_train);
    const auto candidates = mine_frequent_patterns(train_tokens, labels, min_support);
    out.patterns = select_top_patterns(candidates, max_patterns, alpha);

    out.feature_names.assign(expert_feature_names().begin(), expert_feature_names().end());
    for (const auto& p : out.patterns) out.feature_names.push_back("pattern_" + p.symbol_string());

    const std::size_t cols = kNumExpertFeatures + out.patterns.size();
    auto fill = [&](const std::vector<Trajectory>& trajs, const std::vector<double>& horizon_s,
                    const std::vector<std::vector<Token>>* tokens_cache) {
        Matrix X(trajs.size(), cols);
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            const auto expert = extract_expert_features(trajs[i], out.stats, horizon_s[i]);
            for (std::size_t j = 0; j < kNumExpertFeatures; ++j) X(i, j) = expert[j];
            const std::vector<Token> tokens = tokens_cache
                                                  ? (*tokens_cache)[i]
                                                  : tokenize_trajectory(trajs[i], out.stats);
            const auto indicators = pattern_indicator_features(tokens, out.patterns);
            for (std::size_t j = 0; j < indicators.size(); ++j)
                X(i, kNumExpertFeatures + j) = indicators[j];
        }
        return X;
    };
    out.X_train = fill(fold.train_trajectories, fold.horizon_s_train, &train_tokens);
    out.X_test = fill(fold.test_trajectories, fold.horizon_s_test, nullptr);
    return out;
}

DesignMatrices assemble_design(const FoldFeatures* log_features, const FoldData& fold,
                               const FeatureSetSpec& fs) {
    DesignMatrices d;
    std::vector<std::size_t> columns;
    if (fs.log_features) {
        if (!log_features) throw PipelineError("feature set '" + fs.label + "' needs log features");
        if (!fs.single_feature.empty()) {
            columns.push_back(expert_feature_index(fs.single_feature));
            d.names.push_back(fs.single_feature);
        } else {
            columns.resize(log_features->feature_names.size());
            std::iota(columns.begin(), columns.end(), 0);
            d.names = log_features->feature_names;
        }
    }

    const std::size_t extra = fs.include_pretest ? 1 : 0;
    if (fs.include_pretest) d.names.push_back("pretest");

    auto fill = [&](const Matrix* source, const std::vector<std::optional<double>>& pretest,
                    std::size_t n_rows) {
        Matrix X(n_rows, columns.size() + extra);
        for (std::size_t i = 0; i < n_rows; ++i) {
            for (std::size_t j = 0; j < columns.size(); ++j) X(i, j) = (*source)(i, columns[j]);
            if (fs.include_pretest) {
                if (!pretest[i])
                    throw PipelineError("feature set '" + fs.label +
                                        "' needs a pretest score for every student");
                X(i, columns.size()) = *pretest[i];
            }
        }
        return X;
    };
    d.X_train = fill(fs.log_features ? &log_features->X_train : nullptr, fold.pretest_train,
                     fold.pretest_train.size());
    d.X_test = fill(fs.log_features ? &log_features->X_test : nullptr, fold.pretest_test,
                    fold.pretest_test.size());
    if (d.names.empty()) throw PipelineError("feature set '" + fs.label + "' selects no columns");
    return d;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace {

struct JoinedData {
    std::vector<std::string> ids; ///< sorted
    std::vector<Trajectory> trajectories;
    std::vector<double> posttest01;
    std::vector<std::optional<double>> pretest;
    std::vector<int> levels; ///< -1 when absent
    NormalizationInfo normalization;
    std::size_t dropped_no_outcome = 0;
    std::size_t dropped_no_events = 0;
};

JoinedData join_cohort(std::vector<Trajectory> trajectories,
                       const std::map<std::string, OutcomeRecord>& outcomes) {
    JoinedData data;
    std::map<std::string, Trajectory> by_id;
    for (auto& t : trajectories) by_id.emplace(t.student_id, std::move(t));

    std::vector<double> raw_posttest;
    for (const auto& [id, rec] : outcomes) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            ++data.dropped_no_events;
            continue;
        }
        data.ids.push_back(id);
        data.trajectories.push_back(std::move(it->second));
        raw_posttest.push_back(rec.posttest);
        data.pretest.push_back(rec.pretest);
        data.levels.push_back(rec.achievement_level.value_or(-1));
        by_id.erase(it);
    }
    data.dropped_no_outcome = by_id.size();
    if (data.ids.size() < 2) throw PipelineError("fewer than 2 students with both logs and outcomes");
    data.posttest01 = normalize_outcomes(raw_posttest, &data.normalization);
    return data;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

std::string sanitize_label(std::string s) {
    for (char& c : s) {
        if (c == ':' || c == '+' || c == '/') c = '-';
    }
    return s;
}

struct OutputFile {
    std::string name;
    std::string content;
};

} // namespace

LoadedCohort load_input(const PipelineConfig& config) {
    LoadedCohort loaded;
    if (config.synthetic) {
        Cohort cohort = generate_cohort(*config.synthetic);
        loaded.trajectories = std::move(cohort.trajectories);
        loaded.outcomes = std::move(cohort.outcomes);
        return loaded;
    }
    if (config.events_path.empty() || config.outcomes_path.empty())
        throw PipelineError("config has neither input files nor a synthetic section");
    auto events = parse_event_log_file(config.events_path, config.schema);
    loaded.trajectories = std::move(events.trajectories);
    loaded.event_tally = events.tally;
    auto outcomes = parse_outcome_table_file(config.outcomes_path);
    loaded.outcomes = std::move(outcomes.records);
    loaded.outcome_tally = outcomes.tally;
    return loaded;
}

ExperimentResult run_experiment(const PipelineConfig& config, bool write_outputs) {
    const auto t_start = std::chrono::steady_clock::now();
    if (config.horizons.empty()) throw PipelineError("config needs a non-empty horizon grid");
    if (config.feature_sets.empty()) throw PipelineError("config needs at least one feature set");
    if (config.families.empty()) throw PipelineError("config needs at least one model family");

    LoadedCohort loaded = load_input(config);
    JoinedData data = join_cohort(std::move(loaded.trajectories), loaded.outcomes);
    const std::size_t n_students = data.ids.size();

    ExperimentResult result;
    result.normalization = data.normalization;
    result.n_students = n_students;
    result.folds = kfold_assign(data.ids, config.k, config.seed);

    // Usage clocks once per student; truncations per needed horizon.
    std::vector<ClockedTrajectory> clocked(n_students);
    parallel_for(n_students, config.jobs, [&](std::size_t i) {
        clocked[i] = build_usage_clock(data.trajectories[i], config.clock_mode);
    });
    std::vector<double> total_active_s(n_students, 0.0);
    for (std::size_t i = 0; i < n_students; ++i) {
        for (const auto& e : data.trajectories[i].events) total_active_s[i] += e.duration_s;
    }

    std::vector<HorizonSpec> base_horizons = config.horizons;
    const bool any_full_fs =
        std::any_of(config.feature_sets.begin(), config.feature_sets.end(),
                    [](const FeatureSetSpec& fs) { return fs.at_full_horizon; });
    if (any_full_fs &&
        std::none_of(base_horizons.begin(), base_horizons.end(),
                     [](const HorizonSpec& h) { return h.full; })) {
        base_horizons.push_back(HorizonSpec::full_horizon());
    }

    std::map<std::string, std::vector<Trajectory>> truncated; // horizon label -> per student
    for (const auto& h : base_horizons) {
        if (truncated.count(h.label())) continue;
        std::vector<Trajectory> ts(n_students);
        parallel_for(n_students, config.jobs, [&](std::size_t i) {
            ts[i] = truncate_to_horizon(clocked[i], h);
        });
        truncated.emplace(h.label(), std::move(ts));
    }
    auto horizon_sentinel = [&](const HorizonSpec& h, std::size_t student) {
        return h.full ? total_active_s[student] : h.seconds();
    };

    // Per-fold splits (horizon-independent index sets).
    const int k = config.k;
    std::vector<std::vector<std::size_t>> fold_test_idx(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n_students; ++i) {
        fold_test_idx[static_cast<std::size_t>(result.folds.assignment.at(data.ids[i]))].push_back(i);
    }
    for (int f = 0; f < k; ++f) {
        const std::size_t test_n = fold_test_idx[static_cast<std::size_t>(f)].size();
        if (n_students - test_n < 2) {
            throw PipelineError("fold " + std::to_string(f) + " leaves fewer than 2 training students (" +
                                std::to_string(n_students - test_n) + ")");
        }
    }

    auto make_fold_data = [&](const HorizonSpec& h, int f) {
        FoldData fold;
        const auto& trajs = truncated.at(h.label());
        for (std::size_t i = 0; i < n_students; ++i) {
            const bool is_test = result.folds.assignment.at(data.ids[i]) == f;
            if (is_test) {
                fold.test_trajectories.push_back(trajs[i]);
                fold.horizon_s_test.push_back(horizon_sentinel(h, i));
                fold.y_test.push_back(data.posttest01[i]);
                fold.pretest_test.push_back(data.pretest[i]);
                fold.levels_test.push_back(data.levels[i]);
                fold.test_ids.push_back(data.ids[i]);
            } else {
                fold.train_trajectories.push_back(trajs[i]);
                fold.horizon_s_train.push_back(horizon_sentinel(h, i));
                fold.y_train.push_back(data.posttest01[i]);
                fold.pretest_train.push_back(data.pretest[i]);
                fold.train_ids.push_back(data.ids[i]);
            }
        }
        return fold;
    };

    // Cache fold data and log-feature artifacts per (horizon, fold).
    struct HorizonFoldKey {
        std::string label;
        int fold;
        bool operator<(const HorizonFoldKey& o) const {
            return std::tie(label, fold) < std::tie(o.label, o.fold);
        }
    };
    const bool any_log_fs = std::any_of(config.feature_sets.begin(), config.feature_sets.end(),
                                        [](const FeatureSetSpec& fs) { return fs.log_features; });

    std::map<HorizonFoldKey, FoldData> fold_data;
    std::map<HorizonFoldKey, FoldFeatures> fold_features;
    std::vector<std::pair<HorizonFoldKey, const HorizonSpec*>> combos;
    for (const auto& h : base_horizons) {
        for (int f = 0; f < k; ++f) {
            HorizonFoldKey key{h.label(), f};
            if (fold_data.count(key)) continue;
            fold_data.emplace(key, FoldData{});
            combos.emplace_back(key, &h);
        }
    }
    parallel_for(combos.size(), config.jobs, [&](std::size_t c) {
        fold_data.at(combos[c].first) = make_fold_data(*combos[c].second, combos[c].first.fold);
    });
    if (any_log_fs) {
        for (const auto& [key, h] : combos) fold_features.emplace(key, FoldFeatures{});
        parallel_for(combos.size(), config.jobs, [&](std::size_t c) {
            const auto& key = combos[c].first;
            fold_features.at(key) = build_fold_features(
                fold_data.at(key), config.min_support, config.max_patterns, config.alpha,
                "fold=" + std::to_string(key.fold) + ",horizon=" + key.label);
        });
    }

    // Enumerate report cells.
    struct CellTask {
        HorizonSpec horizon;
        ModelFamily family;
        FeatureSetSpec fs;
    };
    std::vector<CellTask> tasks;
    for (const auto& h : config.horizons) {
        for (const auto& family : config.families) {
            for (const auto& fs : config.feature_sets) {
                tasks.push_back(CellTask{h, family, fs});
            }
        }
    }

    result.cells.resize(tasks.size());
    parallel_for(tasks.size(), config.jobs, [&](std::size_t ti) {
        const CellTask& task = tasks[ti];
        CellResult cell;
        cell.horizon_label = task.horizon.label();
        cell.family = task.family;
        cell.feature_set = task.fs.label;

        const HorizonSpec base_h =
            task.fs.at_full_horizon ? HorizonSpec::full_horizon() : task.horizon;

        std::map<std::string, double> importance_by_name;
        std::set<std::string> union_names;
        bool ontrack_available = true;
        OnTrackConfusion ontrack_sum;

        for (int f = 0; f < k; ++f) {
            const HorizonFoldKey key{base_h.label(), f};
            const FoldData& fold = fold_data.at(key);
            const FoldFeatures* lf =
                task.fs.log_features ? &fold_features.at(key) : nullptr;
            const DesignMatrices design = assemble_design(lf, fold, task.fs);

            TrainedPredictor predictor;
            ModelSpec chosen;
            if (task.family == ModelFamily::baseline) {
                predictor = fit_baseline(fold.y_train);
                chosen = predictor.spec;
            } else if (task.family == ModelFamily::linear) {
                predictor = fit_ols(design.X_train, fold.y_train);
                chosen = predictor.spec;
            } else {
                const std::uint64_t cell_seed = mix_seed(
                    config.seed, fnv1a64(cell.horizon_label + "|" + to_string(task.family) + "|" +
                                         task.fs.label + "|" + std::to_string(f)));
                const GridSearchResult gs =
                    grid_search(task.family, design.X_train, fold.y_train, config.grids,
                                config.selection, cell_seed, &design.X_test, &fold.y_test);
                predictor = gs.predictor;
                chosen = gs.best_spec;
            }
            predictor.feature_names = design.names;
            predictor.fold_id = std::to_string(f);
            predictor.horizon_label = cell.horizon_label;
            cell.chosen_specs.push_back(chosen);
            cell.convergence_warning |= predictor.convergence_warning;

            const std::vector<double> pred = predictor.predict(design.X_test);
            cell.fold_metrics.push_back(compute_metrics(pred, fold.y_test));

            const QuintileConfusion qc = quintile_confusion(pred, fold.y_test, fold.y_train);
            for (int r = 0; r < 5; ++r) {
                for (int a = 0; a < 5; ++a)
                    cell.quintile.matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)] +=
                        qc.matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(a)];
            }
            if (f == 0) cell.quintile.cuts = qc.cuts;

            const bool levels_ok =
                !fold.levels_test.empty() &&
                std::all_of(fold.levels_test.begin(), fold.levels_test.end(),
                            [](int l) { return l >= 1; });
            if (levels_ok && ontrack_available) {
                const OnTrackConfusion oc =
                    on_track_confusion(pred, fold.levels_test, config.level_cuts);
                ontrack_sum.true_not_on_track += oc.true_not_on_track;
                ontrack_sum.false_not_on_track += oc.false_not_on_track;
                ontrack_sum.missed_not_on_track += oc.missed_not_on_track;
                ontrack_sum.true_on_track += oc.true_on_track;
            } else {
                ontrack_available = false;
            }

            if (task.family == ModelFamily::forest) {
                const auto importance = rf_feature_importance(predictor);
                for (std::size_t j = 0; j < design.names.size(); ++j) {
                    importance_by_name[design.names[j]] += importance[j];
                    union_names.insert(design.names[j]);
                }
            }
        }

        // Aggregate metrics: mean +- standard error across folds.
        std::vector<double> rmses, r2s, cods;
        for (const auto& m : cell.fold_metrics) {
            rmses.push_back(m.rmse);
            r2s.push_back(m.r2);
            cods.push_back(m.r2_cod);
        }
        const double sqrt_k = std::sqrt(static_cast<double>(k));
        cell.rmse_mean = mean_of(rmses);
        cell.rmse_se = sample_stddev(rmses) / sqrt_k;
        cell.r2_mean = mean_of(r2s);
        cell.r2_se = sample_stddev(r2s) / sqrt_k;
        cell.r2_cod_mean = mean_of(cods);
        cell.r2_cod_se = sample_stddev(cods) / sqrt_k;

        for (int q = 0; q < 5; ++q) {
            int row_total = 0;
            for (int a = 0; a < 5; ++a)
                row_total += cell.quintile.matrix[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
            cell.quintile.precision[static_cast<std::size_t>(q)] =
                row_total > 0 ? static_cast<double>(
                                    cell.quintile.matrix[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)]) /
                                    static_cast<double>(row_total)
                              : 0.0;
        }

        if (ontrack_available) {
            const int pp = ontrack_sum.true_not_on_track + ontrack_sum.false_not_on_track;
            const int ap = ontrack_sum.true_not_on_track + ontrack_sum.missed_not_on_track;
            ontrack_sum.precision =
                pp > 0 ? static_cast<double>(ontrack_sum.true_not_on_track) / pp : 0.0;
            ontrack_sum.recall =
                ap > 0 ? static_cast<double>(ontrack_sum.true_not_on_track) / ap : 0.0;
            cell.on_track = ontrack_sum;
        }

        if (task.family == ModelFamily::forest) {
            cell.feature_names.assign(union_names.begin(), union_names.end());
            double total = 0.0;
            for (const auto& name : cell.feature_names) total += importance_by_name[name];
            for (const auto& name : cell.feature_names) {
                cell.importance.push_back(total > 0.0 ? importance_by_name[name] / total : 0.0);
            }
        }

        result.cells[ti] = std::move(cell);
    });

    const auto t_end = std::chrono::steady_clock::now();
    result.runtime_s = std::chrono::duration<double>(t_end - t_start).count();

    // -----------------------------------------------------------------
    // Report files
    // -----------------------------------------------------------------
    std::vector<OutputFile> files;

    std::ostringstream metrics_csv;
    metrics_csv << "horizon,family,feature_set,rmse_mean,rmse_se,r2_mean,r2_se,"
                   "r2_cod_mean,r2_cod_se\n";
    for (const auto& cell : result.cells) {
        metrics_csv << cell.horizon_label << ',' << to_string(cell.family) << ','
                    << cell.feature_set << ',' << fmt(cell.rmse_mean) << ',' << fmt(cell.rmse_se)
                    << ',' << fmt(cell.r2_mean) << ',' << fmt(cell.r2_se) << ','
                    << fmt(cell.r2_cod_mean) << ',' << fmt(cell.r2_cod_se) << '\n';
    }
    files.push_back({"metrics.csv", metrics_csv.str()});

    for (const auto& cell : result.cells) {
        const std::string tag = cell.horizon_label + "_" + to_string(cell.family) + "_" +
                                sanitize_label(cell.feature_set);
        std::ostringstream qcsv;
        qcsv << "predicted\\actual,Q1,Q2,Q3,Q4,Q5,precision\n";
        for (int q = 0; q < 5; ++q) {
            qcsv << 'Q' << q + 1;
            for (int a = 0; a < 5; ++a)
                qcsv << ',' << cell.quintile.matrix[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)];
            qcsv << ',' << fmt(cell.quintile.precision[static_cast<std::size_t>(q)]) << '\n';
        }
        files.push_back({"confusion_quintile_" + tag + ".csv", qcsv.str()});

        if (cell.on_track) {
            std::ostringstream ocsv;
            ocsv << ",actual_not_on_track,actual_on_track\n";
            ocsv << "pred_not_on_track," << cell.on_track->true_not_on_track << ','
                 << cell.on_track->false_not_on_track << '\n';
            ocsv << "pred_on_track," << cell.on_track->missed_not_on_track << ','
                 << cell.on_track->true_on_track << '\n';
            ocsv << "precision," << fmt(cell.on_track->precision) << ",\n";
            ocsv << "recall," << fmt(cell.on_track->recall) << ",\n";
            files.push_back({"confusion_ontrack_" + tag + ".csv", ocsv.str()});
        }

        if (cell.family == ModelFamily::forest && !cell.importance.empty()) {
            std::vector<std::size_t> order(cell.importance.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (cell.importance[a] != cell.importance[b])
                    return cell.importance[a] > cell.importance[b];
                return cell.feature_names[a] < cell.feature_names[b];
            });
            std::ostringstream icsv;
            icsv << "rank,feature,importance\n";
            for (std::size_t r = 0; r < order.size(); ++r) {
                icsv << r + 1 << ',' << cell.feature_names[order[r]] << ','
                     << fmt(cell.importance[order[r]]) << '\n';
            }
            files.push_back({"importance_" + tag + ".csv", icsv.str()});
        }
    }

    if (any_log_fs) {
        for (const auto& [key, features] : fold_features) {
            files.push_back({"patterns/patterns_" + key.label + "_fold" + std::to_string(key.fold) +
                                 ".json",
                             patterns_to_json(features.patterns)});
        }
    }

    // Manifest: the hash covers config + file contents, never the runtime.
    ordered_json manifest;
    const std::string config_hash = fnv1a64_hex(config.canonical_json());
    manifest["config_hash"] = config_hash;
    manifest["seed"] = config.seed;
    manifest["k"] = k;
    manifest["n_students"] = n_students;
    manifest["normalization"] = {{"min", data.normalization.min}, {"max", data.normalization.max}};
    manifest["dropped_no_outcome"] = data.dropped_no_outcome;
    manifest["dropped_no_events"] = data.dropped_no_events;
    ordered_json file_list = ordered_json::array();
    std::string hash_input = config_hash;
    std::sort(files.begin(), files.end(),
              [](const OutputFile& a, const OutputFile& b) { return a.name < b.name; });
    for (const auto& f : files) {
        const std::string h = fnv1a64_hex(f.content);
        file_list.push_back({{"name", f.name}, {"fnv1a64", h}});
        hash_input += "|" + f.name + ":" + h;
    }
    manifest["files"] = file_list;
    manifest["manifest_hash"] = fnv1a64_hex(hash_input);
    manifest["runtime_s"] = result.runtime_s;
    result.manifest_json = manifest.dump(2);

    if (write_outputs) {
        const fs::path out_dir(config.output_dir);
        for (const auto& f : files) {
            const fs::path path = out_dir / f.name;
            fs::create_directories(path.parent_path());
            std::ofstream out(path);
            if (!out) throw PipelineError("cannot write '" + path.string() + "'");
            out << f.content;
            result.written_files.push_back(path.string());
        }
        std::ofstream mout(out_dir / "manifest.json");
        if (!mout) throw PipelineError("cannot write manifest.json");
        mout << result.manifest_json << '\n';
        result.written_files.push_back((out_dir / "manifest.json").string());
    }
    return result;
}

} // namespace edhorizon
