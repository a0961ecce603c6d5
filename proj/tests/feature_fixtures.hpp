#pragma once

#include <array>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "edhorizon/features.hpp"
#include "edhorizon/types.hpp"

namespace edhorizon::testing {

/// One hand-built trajectory with hand-computed expected values for all 16
/// expert features. Stats are pinned explicitly so every expectation is
/// checkable by hand. Outcome codes: s/f/n = attempt with success/fail/none,
/// S/F = complete event with success/fail.
struct FeatureFixture {
    std::string name;
    std::vector<std::tuple<std::string, char, double>> events; ///< unit, outcome code, duration
    std::map<std::string, double> unit_means;
    double global_mean = 0.0;
    double horizon_s = 7200.0;
    std::array<double, kNumExpertFeatures> expected{};
};

inline Trajectory fixture_trajectory(const FeatureFixture& fx) {
    Trajectory t;
    t.student_id = "fx";
    std::int64_t ts = 1000000;
    for (const auto& [unit, code, duration] : fx.events) {
        EventRecord e;
        e.student_id = t.student_id;
        e.timestamp = ts;
        e.unit_id = unit;
        e.duration_s = duration;
        e.event_type = (code == 'S' || code == 'F') ? EventType::complete : EventType::attempt;
        switch (code) {
            case 's': case 'S': e.outcome = Outcome::success; break;
            case 'f': case 'F': e.outcome = Outcome::fail; break;
            default: e.outcome = Outcome::none; break;
        }
        t.events.push_back(std::move(e));
        ts += 60;
    }
    return t;
}

inline PopulationTimeStats fixture_stats(const FeatureFixture& fx) {
    PopulationTimeStats stats;
    for (const auto& [unit, mean] : fx.unit_means) stats.unit_mean_s[unit] = mean;
    stats.global_mean_s = fx.global_mean;
    stats.n_attempts = 1;
    stats.source = "fixture";
    return stats;
}

/// Feature order: num_problem, num_success_problem, perc_success_problem,
/// min/avg/max_attempts_per_problem, num_guess, num_idle, num_twice,
/// num_long_idle, avg_time_per_problem, avg_time_per_success_problem,
/// avg_time_per_failed_problem, persistence_5, persistence_10,
/// time_first_unproductive_persistence.
inline const std::vector<FeatureFixture>& feature_fixtures() {
    static const std::vector<FeatureFixture> fixtures = {
        {"two-problems-basic",
         {{"A", 'f', 1}, {"A", 'f', 1}, {"A", 's', 1}, {"B", 'f', 1}, {"B", 'f', 1}},
         {{"A", 1}, {"B", 1}}, 1.0, 7200,
         {2, 1, 0.5, 2, 2.5, 3, 5, 0, 0, 0, 2.5, 3, 2, 0, 0, 7200}},

        {"twelve-consecutive-fails",
         {{"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10},
          {"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10},
          {"A", 'f', 10}, {"A", 'f', 10}},
         {{"A", 10}}, 10.0, 7200,
         {1, 0, 0, 12, 12, 12, 0, 0, 0, 0, 120, 0, 120, 2, 1, 50}},

        {"empty-two-hours", {}, {}, 0.0, 7200,
         {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 7200}},

        {"empty-one-hour", {}, {}, 0.0, 3600,
         {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 3600}},

        {"single-success",
         {{"A", 's', 1.5}},
         {{"A", 2}}, 2.0, 3600,
         {1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 1.5, 1.5, 0, 0, 0, 3600}},

        {"revisit-opens-new-instance",
         {{"A", 'f', 5}, {"B", 'f', 5}, {"A", 's', 5}},
         {{"A", 4}, {"B", 6}}, 5.0, 7200,
         {3, 1, 1.0 / 3.0, 1, 1, 1, 0, 2, 0, 0, 5, 5, 5, 0, 0, 7200}},

        {"guess-boundary-inclusive",
         {{"A", 'f', 2.0}, {"A", 's', 2.000001}},
         {{"A", 1}}, 1.0, 3600,
         {1, 1, 1, 2, 2, 2, 1, 2, 1, 0, 4.000001, 4.000001, 0, 0, 0, 3600}},

        {"long-idle-strictly-over-300",
         {{"A", 'f', 301}, {"A", 'f', 300}, {"A", 's', 299}},
         {{"A", 300}}, 300.0, 7200,
         {1, 1, 1, 3, 3, 3, 0, 1, 0, 1, 900, 900, 0, 0, 0, 7200}},

        {"unseen-unit-falls-back-to-global",
         {{"Z", 'f', 5}, {"Z", 's', 3}},
         {{"A", 10}}, 4.0, 3600,
         {1, 1, 1, 2, 2, 2, 0, 1, 0, 0, 8, 8, 0, 0, 0, 3600}},

        {"ten-fail-single-run",
         {{"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2},
          {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}},
         {{"A", 2}}, 2.0, 7200,
         {1, 0, 0, 10, 10, 10, 10, 0, 0, 0, 20, 0, 20, 2, 1, 10}},

        {"success-resets-the-failure-run",
         {{"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 's', 1},
          {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}},
         {{"A", 1}}, 1.0, 7200,
         {1, 0, 0, 10, 10, 10, 10, 0, 0, 0, 10, 0, 10, 1, 0, 10}},

        {"runs-do-not-span-problems",
         {{"A", 'f', 10}, {"A", 'f', 10}, {"A", 'f', 10}, {"B", 'f', 10}, {"B", 'f', 10}},
         {{"A", 10}, {"B", 10}}, 10.0, 7200,
         {2, 0, 0, 2, 2.5, 3, 0, 0, 0, 0, 25, 0, 25, 0, 0, 7200}},

        {"outcome-none-extends-the-run",
         {{"A", 'f', 4}, {"A", 'n', 4}, {"A", 'f', 4}, {"A", 'n', 4}, {"A", 'f', 4}},
         {{"A", 4}}, 4.0, 7200,
         {1, 0, 0, 5, 5, 5, 0, 0, 0, 0, 20, 0, 20, 1, 0, 20}},

        {"idle-uses-per-unit-means",
         {{"A", 'f', 10}, {"B", 'f', 10}},
         {{"A", 5}, {"B", 20}}, 12.5, 7200,
         {2, 0, 0, 1, 1, 1, 0, 1, 0, 0, 10, 0, 10, 0, 0, 7200}},

        {"twice-average-threshold",
         {{"A", 's', 11}},
         {{"A", 5}}, 5.0, 3600,
         {1, 1, 1, 1, 1, 1, 0, 1, 1, 0, 11, 11, 0, 0, 0, 3600}},

        {"fourteen-fails-then-success",
         {{"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1},
          {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1},
          {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 's', 1}},
         {{"A", 1}}, 1.0, 7200,
         {1, 1, 1, 15, 15, 15, 15, 0, 0, 0, 15, 15, 0, 2, 1, 5}},

        {"alternating-success-failure",
         {{"A", 's', 3}, {"A", 'f', 3}, {"A", 's', 3}, {"A", 'f', 3}},
         {{"A", 3}}, 3.0, 7200,
         {1, 0, 0, 4, 4, 4, 0, 0, 0, 0, 12, 0, 12, 0, 0, 7200}},

        {"two-successful-problems",
         {{"B", 'f', 2}, {"B", 's', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 's', 2}},
         {{"A", 2}, {"B", 2}}, 2.0, 7200,
         {2, 2, 1, 2, 2.5, 3, 5, 0, 0, 0, 5, 5, 0, 0, 0, 7200}},

        {"five-problem-spread",
         {{"U1", 's', 1}, {"U2", 'f', 600}, {"U3", 's', 2}, {"U4", 'f', 301}, {"U5", 's', 2.5}},
         {{"U1", 100}, {"U2", 100}, {"U3", 100}, {"U4", 100}, {"U5", 100}}, 100.0, 7200,
         {5, 3, 0.6, 1, 1, 1, 2, 2, 2, 2, 181.3, 5.5 / 3.0, 450.5, 0, 0, 7200}},

        {"zero-global-mean-everything-idle",
         {{"A", 'f', 1}, {"A", 's', 1}},
         {}, 0.0, 3600,
         {1, 1, 1, 2, 2, 2, 2, 2, 2, 0, 2, 2, 0, 0, 0, 3600}},

        {"eleven-fails-then-success",
         {{"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2},
          {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2}, {"A", 'f', 2},
          {"A", 'f', 2}, {"A", 's', 2}},
         {{"A", 2}}, 2.0, 7200,
         {1, 1, 1, 12, 12, 12, 12, 0, 0, 0, 24, 24, 0, 2, 1, 10}},

        {"two-disjoint-windows-in-one-problem",
         {{"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1},
          {"A", 's', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1}, {"A", 'f', 1},
          {"A", 'f', 1}, {"A", 'f', 1}},
         {{"A", 1}}, 1.0, 7200,
         {1, 0, 0, 12, 12, 12, 12, 0, 0, 0, 12, 0, 12, 2, 0, 5}},

        {"mixed-durations-multi-unit",
         {{"A", 'f', 1}, {"A", 's', 3}, {"B", 'f', 250}, {"B", 'f', 2}, {"C", 's', 500}},
         {{"A", 2}, {"B", 100}, {"C", 400}}, 150.0, 7200,
         {3, 2, 2.0 / 3.0, 1, 5.0 / 3.0, 2, 2, 3, 1, 1, 252, 252, 252, 0, 0, 7200}},

        {"complete-event-closes-the-problem",
         {{"A", 'f', 1}, {"A", 'S', 1}},
         {{"A", 1}}, 1.0, 3600,
         {1, 1, 1, 2, 2, 2, 2, 0, 0, 0, 2, 2, 0, 0, 0, 3600}},
    };
    return fixtures;
}

/// Indices of integer-valued features (compared exactly); the rest compare
/// to 1e-9.
inline const std::vector<std::size_t>& integer_feature_indices() {
    static const std::vector<std::size_t> idx = {0, 1, 3, 5, 6, 7, 8, 9, 13, 14};
    return idx;
}

} // namespace edhorizon::testing
