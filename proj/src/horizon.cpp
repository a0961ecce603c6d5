#include "edhorizon/horizon.hpp"

#include <algorithm>
#include <cstdio>

#include "edhorizon/core.hpp"
#include "edhorizon/ingest.hpp"

namespace edhorizon {

const char* to_string(ClockMode m) {
    return m == ClockMode::session_wall_clock ? "session_wall_clock" : "active_time";
}

HorizonSpec HorizonSpec::of_hours(double h) {
    if (!(h > 0.0)) throw PipelineError("horizon hours must be positive");
    return HorizonSpec{h, false};
}

HorizonSpec HorizonSpec::parse(const std::string& token) {
    if (token == "full" || token == "FULL" || token == "H") return full_horizon();
    try {
        std::size_t pos = 0;
        double h = std::stod(token, &pos);
        if (pos != token.size()) throw PipelineError("bad horizon token '" + token + "'");
        return of_hours(h);
    } catch (const PipelineError&) {
        throw;
    } catch (...) {
        throw PipelineError("bad horizon token '" + token + "'");
    }
}

std::string HorizonSpec::label() const {
    if (full) return "full";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%gh", hours);
    return std::string(buf);
}

ClockedTrajectory build_usage_clock(const Trajectory& traj, ClockMode mode) {
    ClockedTrajectory ct;
    ct.trajectory = traj;
    ct.cumulative_usage_s.reserve(traj.events.size());

    if (mode == ClockMode::active_time) {
        double total = 0.0;
        for (const auto& e : traj.events) {
            total += e.duration_s;
            ct.cumulative_usage_s.push_back(total);
        }
        return ct;
    }

    // session_wall_clock: usage within a session is (event end - session
    // start); completed sessions carry forward as a running total. Events
    // whose end precedes an earlier end in the same session are clamped so
    // the clock never runs backwards.
    double carried = 0.0;
    double prev_cumulative = 0.0;
    for (const auto& span : sessionize(traj)) {
        const double session_start = static_cast<double>(traj.events[span.first_event].timestamp);
        double session_last = 0.0;
        for (std::size_t i = span.first_event; i <= span.last_event; ++i) {
            const auto& e = traj.events[i];
            if (i > span.first_event && e.timestamp < traj.events[i - 1].timestamp) {
                throw PipelineError("timestamps decrease within a session for student '" +
                                    traj.student_id + "'");
            }
            double usage = carried + (static_cast<double>(e.timestamp) + e.duration_s - session_start);
            usage = std::max(usage, prev_cumulative);
            ct.cumulative_usage_s.push_back(usage);
            prev_cumulative = usage;
            session_last = usage;
        }
        carried = session_last;
    }
    return ct;
}

Trajectory truncate_to_horizon(const ClockedTrajectory& ct, const HorizonSpec& spec) {
    Trajectory out;
    out.student_id = ct.trajectory.student_id;
    if (spec.full) {
        out.events = ct.trajectory.events;
        return out;
    }
    const double budget = spec.seconds();
    std::size_t n = 0;
    while (n < ct.cumulative_usage_s.size() && ct.cumulative_usage_s[n] <= budget) ++n;
    out.events.assign(ct.trajectory.events.begin(), ct.trajectory.events.begin() + n);
    return out;
}

} // namespace edhorizon
