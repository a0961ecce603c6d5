#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "edhorizon/types.hpp"

namespace edhorizon {

/// Maximal run of consecutive events sharing unit_id. Events are referenced
/// by index range [begin, end) into the owning trajectory.
struct ProblemInstance {
    std::string unit_id;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool success = false; ///< final event of the run has outcome success
    double total_time_s = 0.0;

    std::size_t attempts() const { return end - begin; }
};

std::vector<ProblemInstance> segment_problems(const Trajectory& traj);

/// Cross-student attempt-duration baselines, computed from the training
/// fold only at a fixed horizon. Units unseen in training fall back to the
/// global mean.
struct PopulationTimeStats {
    std::map<std::string, double> unit_mean_s;
    double global_mean_s = 0.0;
    std::size_t n_attempts = 0;
    std::string source; ///< fold + horizon the stats were built from

    double mean_for_unit(const std::string& unit_id) const;
};

PopulationTimeStats compute_population_time_stats(const std::vector<Trajectory>& training,
                                                  const std::string& source = {});

inline constexpr std::size_t kNumExpertFeatures = 16;

/// Canonical order of the 16 expert log features; these exact names head
/// every emitted feature CSV.
const std::array<std::string, kNumExpertFeatures>& expert_feature_names();

std::size_t expert_feature_index(const std::string& name);

/// Computes the 16 expert features for one trajectory already truncated to
/// a horizon. `horizon_s` is the budget in seconds and doubles as the
/// sentinel for time_first_unproductive_persistence when the student never
/// hits a length-5 failure window.
std::array<double, kNumExpertFeatures> extract_expert_features(const Trajectory& traj,
                                                               const PopulationTimeStats& stats,
                                                               double horizon_s);

/// Named feature row for one student; expert features first, then pattern
/// indicators, then the optional pretest column.
struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;
};

} // namespace edhorizon
