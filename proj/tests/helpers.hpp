#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "edhorizon/types.hpp"

namespace edhorizon::testing {

inline EventRecord make_event(std::string student, std::int64_t ts, std::string unit,
                              Outcome outcome, double duration,
                              std::optional<std::string> session = std::nullopt,
                              EventType type = EventType::attempt) {
    EventRecord e;
    e.student_id = std::move(student);
    e.timestamp = ts;
    e.session_id = std::move(session);
    e.unit_id = std::move(unit);
    e.event_type = type;
    e.outcome = outcome;
    e.duration_s = duration;
    return e;
}

/// Compact trajectory builder: one event per (unit, outcome, duration)
/// triple, timestamps spaced 60 s apart.
inline Trajectory make_trajectory(
    const std::string& student,
    const std::vector<std::tuple<std::string, Outcome, double>>& rows) {
    Trajectory t;
    t.student_id = student;
    std::int64_t ts = 1000000;
    for (const auto& [unit, outcome, duration] : rows) {
        t.events.push_back(make_event(student, ts, unit, outcome, duration));
        ts += 60;
    }
    return t;
}

} // namespace edhorizon::testing
