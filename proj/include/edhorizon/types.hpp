#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace edhorizon {

enum class EventType { attempt, complete };
enum class Outcome { success, fail, none };

/// One timestamped student interaction at the finest level the source
/// system records ("problem" granularity).
struct EventRecord {
    std::string student_id;
    std::int64_t timestamp = 0; ///< seconds since Unix epoch, UTC
    std::optional<std::string> session_id;
    std::string unit_id;
    EventType event_type = EventType::attempt;
    Outcome outcome = Outcome::none;
    double duration_s = 0.0;
};

struct OutcomeRecord {
    std::string student_id;
    std::optional<double> pretest;
    double posttest = 0.0;
    std::optional<int> achievement_level; ///< 1..5 when present
};

/// Chronologically sorted events for one student. Equal timestamps keep
/// their original input order.
struct Trajectory {
    std::string student_id;
    std::vector<EventRecord> events;
};

const char* to_string(EventType t);
const char* to_string(Outcome o);
std::optional<EventType> event_type_from_string(const std::string& s);
std::optional<Outcome> outcome_from_string(const std::string& s);

/// Parses "YYYY-MM-DDTHH:MM:SS[.frac][Z|+00:00]" as UTC epoch seconds.
/// Fractional seconds are truncated (the schema is second precision).
std::optional<std::int64_t> parse_iso8601_utc(const std::string& s);
std::string format_iso8601_utc(std::int64_t epoch_s);

} // namespace edhorizon
