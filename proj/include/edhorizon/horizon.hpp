#pragma once

#include <string>
#include <vector>

#include "edhorizon/types.hpp"

namespace edhorizon {

enum class ClockMode { session_wall_clock, active_time };

const char* to_string(ClockMode m);

/// Cumulative usage-time budget. `full` means the entire log.
struct HorizonSpec {
    double hours = 0.0;
    bool full = false;

    static HorizonSpec full_horizon() { return HorizonSpec{0.0, true}; }
    static HorizonSpec of_hours(double h);
    /// Parses a decimal-hour token or `full`.
    static HorizonSpec parse(const std::string& token);

    double seconds() const { return hours * 3600.0; }
    std::string label() const; ///< e.g. "2h", "0.5h", "full"
};

/// Trajectory annotated with per-event cumulative usage seconds (usage
/// accrued at the event's completion). Non-decreasing by construction.
struct ClockedTrajectory {
    Trajectory trajectory;
    std::vector<double> cumulative_usage_s;
};

/// active_time: prefix sums of event durations. session_wall_clock: within
/// a session usage accrues as (event end - session start), carried across
/// sessions as a running total; inter-session gaps accrue nothing.
ClockedTrajectory build_usage_clock(const Trajectory& traj, ClockMode mode);

/// Maximal prefix of events with cumulative usage <= the horizon budget.
/// FULL returns the whole trajectory.
Trajectory truncate_to_horizon(const ClockedTrajectory& ct, const HorizonSpec& spec);

} // namespace edhorizon
