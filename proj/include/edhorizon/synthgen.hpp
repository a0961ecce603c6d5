#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "edhorizon/types.hpp"

namespace edhorizon {

/// Synthetic cohort: latent per-student ability drives success odds,
/// attempt durations and the outcome scores, so downstream features carry
/// real signal at desk scale.
struct CohortConfig {
    int n_students = 500;
    int n_units = 40;
    int sessions_per_student = 8;
    double session_minutes_mean = 18.0;
    double session_minutes_sd = 4.0;
    double ability_sd = 1.0;          ///< ability ~ N(0, ability_sd)
    double difficulty_sd = 0.9;       ///< unit difficulty ~ N(0, difficulty_sd)
    double duration_log_mean = 3.0;   ///< log-normal location at ability 0 (~20 s)
    double duration_log_sd = 0.5;
    double ability_time_scale = 0.25; ///< location shift: -ability * scale
    double posttest_noise_sd = 0.08;  ///< posttest = clamp01(logistic(ability) + noise)
    double pretest_noise_sd = 0.05;   ///< pretest = clamp01(posttest + noise)
    int give_up_base = 8;             ///< failure-run cap before moving on
    std::uint64_t seed = 0;
};

struct Cohort {
    std::vector<Trajectory> trajectories; ///< sorted by student_id
    std::map<std::string, OutcomeRecord> outcomes;
};

/// Deterministic given the config: per-student streams are seeded by
/// (cohort seed, student index).
Cohort generate_cohort(const CohortConfig& config);

/// Writes the exact ingest formats (JSONL events, outcome CSV); identical
/// config implies byte-identical files.
void write_cohort(const Cohort& cohort, const std::string& events_path,
                  const std::string& outcomes_path);

} // namespace edhorizon
