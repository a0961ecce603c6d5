#include "edhorizon/features.hpp"

#include <algorithm>

#include "edhorizon/core.hpp"

namespace edhorizon {

std::vector<ProblemInstance> segment_problems(const Trajectory& traj) {
    std::vector<ProblemInstance> problems;
    const auto& events = traj.events;
    std::size_t i = 0;
    while (i < events.size()) {
        std::size_t j = i + 1;
        while (j < events.size() && events[j].unit_id == events[i].unit_id) ++j;
        ProblemInstance p;
        p.unit_id = events[i].unit_id;
        p.begin = i;
        p.end = j;
        p.success = events[j - 1].outcome == Outcome::success;
        for (std::size_t k = i; k < j; ++k) p.total_time_s += events[k].duration_s;
        problems.push_back(std::move(p));
        i = j;
    }
    return problems;
}

double PopulationTimeStats::mean_for_unit(const std::string& unit_id) const {
    auto it = unit_mean_s.find(unit_id);
    return it != unit_mean_s.end() ? it->second : global_mean_s;
}

PopulationTimeStats compute_population_time_stats(const std::vector<Trajectory>& training,
                                                  const std::string& source) {
    if (training.empty()) throw PipelineError("population time stats need a non-empty training set");

    PopulationTimeStats stats;
    stats.source = source;
    std::map<std::string, std::pair<double, std::size_t>> per_unit; // sum, count
    double total = 0.0;
    for (const auto& traj : training) {
        for (const auto& e : traj.events) {
            auto& [sum, count] = per_unit[e.unit_id];
            sum += e.duration_s;
            ++count;
            total += e.duration_s;
            ++stats.n_attempts;
        }
    }
    for (const auto& [unit, acc] : per_unit) {
        stats.unit_mean_s[unit] = acc.first / static_cast<double>(acc.second);
    }
    if (stats.n_attempts > 0) stats.global_mean_s = total / static_cast<double>(stats.n_attempts);
    return stats;
}

const std::array<std::string, kNumExpertFeatures>& expert_feature_names() {
    static const std::array<std::string, kNumExpertFeatures> names = {
        "num_problem",
        "num_success_problem",
        "perc_success_problem",
        "min_attempts_per_problem",
        "avg_attempts_per_problem",
        "max_attempts_per_problem",
        "num_guess_in_problem",
        "num_idle_in_problem",
        "num_twice_avg_time_in_problem",
        "num_long_idle_in_problem",
        "avg_time_per_problem",
        "avg_time_per_success_problem",
        "avg_time_per_failed_problem",
        "num_unproductive_persistence_thres_5",
        "num_unproductive_persistence_thres_10",
        "time_first_unproductive_persistence",
    };
    return names;
}

std::size_t expert_feature_index(const std::string& name) {
    const auto& names = expert_feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw PipelineError("unknown expert feature '" + name + "'");
}

std::array<double, kNumExpertFeatures> extract_expert_features(const Trajectory& traj,
                                                               const PopulationTimeStats& stats,
                                                               double horizon_s) {
    constexpr double kGuessThresholdS = 2.0;   // inclusive
    constexpr double kLongIdleThresholdS = 300.0;
    constexpr std::size_t kPersistShort = 5;
    constexpr std::size_t kPersistLong = 10;

    std::array<double, kNumExpertFeatures> f{};
    const auto problems = segment_problems(traj);

    const double num_problem = static_cast<double>(problems.size());
    double num_success = 0.0;
    double min_attempts = 0.0, max_attempts = 0.0, sum_attempts = 0.0;
    double sum_time = 0.0, sum_time_success = 0.0, sum_time_failed = 0.0;
    double n_failed = 0.0;

    for (std::size_t pi = 0; pi < problems.size(); ++pi) {
        const auto& p = problems[pi];
        const auto attempts = static_cast<double>(p.attempts());
        if (pi == 0) {
            min_attempts = max_attempts = attempts;
        } else {
            min_attempts = std::min(min_attempts, attempts);
            max_attempts = std::max(max_attempts, attempts);
        }
        sum_attempts += attempts;
        sum_time += p.total_time_s;
        if (p.success) {
            num_success += 1.0;
            sum_time_success += p.total_time_s;
        } else {
            n_failed += 1.0;
            sum_time_failed += p.total_time_s;
        }
    }

    double num_guess = 0.0, num_idle = 0.0, num_twice = 0.0, num_long_idle = 0.0;
    for (const auto& e : traj.events) {
        const double unit_mean = stats.mean_for_unit(e.unit_id);
        if (e.duration_s <= kGuessThresholdS) num_guess += 1.0;
        if (e.duration_s > unit_mean) num_idle += 1.0;
        if (e.duration_s > 2.0 * unit_mean) num_twice += 1.0;
        if (e.duration_s > kLongIdleThresholdS) num_long_idle += 1.0;
    }

    // Unproductive persistence: within each problem, maximal runs of
    // consecutive attempts without a success. Disjoint windows, so a run of
    // length L yields floor(L/5) and floor(L/10) counts.
    double persist5 = 0.0, persist10 = 0.0;
    double first_persist_time = horizon_s;
    bool found_first = false;
    double active_cumulative = 0.0;
    for (const auto& p : problems) {
        std::size_t run = 0;
        for (std::size_t k = p.begin; k < p.end; ++k) {
            const auto& e = traj.events[k];
            active_cumulative += e.duration_s;
            if (e.outcome == Outcome::success) {
                persist5 += static_cast<double>(run / kPersistShort);
                persist10 += static_cast<double>(run / kPersistLong);
                run = 0;
            } else {
                ++run;
                if (run == kPersistShort && !found_first) {
                    first_persist_time = active_cumulative;
                    found_first = true;
                }
            }
        }
        persist5 += static_cast<double>(run / kPersistShort);
        persist10 += static_cast<double>(run / kPersistLong);
    }

    f[0] = num_problem;
    f[1] = num_success;
    f[2] = num_problem > 0.0 ? num_success / num_problem : 0.0;
    f[3] = min_attempts;
    f[4] = num_problem > 0.0 ? sum_attempts / num_problem : 0.0;
    f[5] = max_attempts;
    f[6] = num_guess;
    f[7] = num_idle;
    f[8] = num_twice;
    f[9] = num_long_idle;
    f[10] = num_problem > 0.0 ? sum_time / num_problem : 0.0;
    f[11] = num_success > 0.0 ? sum_time_success / num_success : 0.0;
    f[12] = n_failed > 0.0 ? sum_time_failed / n_failed : 0.0;
    f[13] = persist5;
    f[14] = persist10;
    f[15] = first_persist_time;
    return f;
}

} // namespace edhorizon
