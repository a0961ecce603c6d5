#include "edhorizon/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "edhorizon/core.hpp"
#include "edhorizon/ingest.hpp"

namespace edhorizon {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// 2023-01-09T09:00:00Z; every student starts the program the same week.
constexpr std::int64_t kEpochBase = 1673254800;

std::string student_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%04d", index);
    return std::string(buf);
}

} // namespace

Cohort generate_cohort(const CohortConfig& config) {
    if (config.n_students < 1 || config.n_units < 1)
        throw PipelineError("cohort needs at least one student and one unit");
    if (config.posttest_noise_sd < 0.0 || config.pretest_noise_sd < 0.0)
        throw PipelineError("cohort noise sd must be non-negative");

    std::vector<double> difficulty(static_cast<std::size_t>(config.n_units));
    {
        Rng rng(mix_seed(config.seed, 0xd1ff1cULL));
        for (auto& d : difficulty) d = rng.normal(0.0, config.difficulty_sd);
    }

    const std::vector<double> level_cuts{0.2, 0.4, 0.6, 0.8};
    Cohort cohort;
    for (int s = 0; s < config.n_students; ++s) {
        Rng rng(mix_seed(config.seed, 1000003ULL * static_cast<std::uint64_t>(s + 1)));
        const double ability = rng.normal(0.0, config.ability_sd);
        const int give_up_cap =
            std::max(3, static_cast<int>(std::llround(config.give_up_base - ability)));

        Trajectory traj;
        traj.student_id = student_name(s);

        int unit = 0;
        int failure_run = 0;
        for (int session = 0; session < config.sessions_per_student; ++session) {
            const double budget_s =
                60.0 * std::max(5.0, rng.normal(config.session_minutes_mean,
                                                config.session_minutes_sd));
            std::int64_t t = kEpochBase + static_cast<std::int64_t>(session) * 86400 +
                             (s % 5) * 1800;
            double elapsed = 0.0;
            const std::string session_id = traj.student_id + "-" + std::to_string(session);

            while (elapsed < budget_s) {
                const double p_success =
                    logistic(ability - difficulty[static_cast<std::size_t>(unit)]);
                const bool success = rng.bernoulli(p_success);
                double duration = rng.lognormal(
                    config.duration_log_mean - ability * config.ability_time_scale,
                    config.duration_log_sd);
                duration = std::clamp(duration, 0.5, 600.0);
                duration = std::round(duration * 1000.0) / 1000.0; // ms precision

                EventRecord e;
                e.student_id = traj.student_id;
                e.timestamp = t;
                e.session_id = session_id;
                e.unit_id = "u" + std::to_string(unit);
                e.event_type = EventType::attempt;
                e.outcome = success ? Outcome::success : Outcome::fail;
                e.duration_s = duration;
                traj.events.push_back(std::move(e));

                const double gap = 1.0 + rng.uniform01() * 9.0;
                t += static_cast<std::int64_t>(std::llround(duration + gap));
                elapsed += duration + gap;

                if (success) {
                    failure_run = 0;
                    unit = (unit + 1) % config.n_units;
                } else if (++failure_run >= give_up_cap) {
                    failure_run = 0;
                    unit = (unit + 1) % config.n_units;
                }
            }
        }

        OutcomeRecord rec;
        rec.student_id = traj.student_id;
        rec.posttest =
            clamp01(logistic(ability) + rng.normal(0.0, config.posttest_noise_sd));
        rec.posttest = std::round(rec.posttest * 1e6) / 1e6;
        double pre = clamp01(rec.posttest + rng.normal(0.0, config.pretest_noise_sd));
        rec.pretest = std::round(pre * 1e6) / 1e6;
        int level = 1;
        for (double c : level_cuts) {
            if (rec.posttest >= c) ++level;
        }
        rec.achievement_level = level;

        cohort.trajectories.push_back(std::move(traj));
        cohort.outcomes.emplace(rec.student_id, rec);
    }
    return cohort;
}

void write_cohort(const Cohort& cohort, const std::string& events_path,
                  const std::string& outcomes_path) {
    std::ofstream events(events_path);
    if (!events) throw PipelineError("cannot write '" + events_path + "'");
    write_event_log(events, cohort.trajectories);

    std::ofstream outcomes(outcomes_path);
    if (!outcomes) throw PipelineError("cannot write '" + outcomes_path + "'");
    write_outcome_table(outcomes, cohort.outcomes);
}

} // namespace edhorizon
