#include "edhorizon/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "edhorizon/core.hpp"

namespace edhorizon {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string FieldSchema::source_name(const std::string& canonical) const {
    for (const auto& [source, canon] : source_to_canonical) {
        if (canon == canonical) return source;
    }
    return canonical;
}

namespace {

constexpr std::size_t kMaxSampleErrors = 5;

void tally_reject(ParseTally& tally, const std::string& reason) {
    ++tally.rejected;
    if (tally.sample_errors.size() < kMaxSampleErrors) tally.sample_errors.push_back(reason);
}

// Returns nullopt and a reason through `error` if the line is malformed.
std::optional<EventRecord> parse_event_line(const std::string& line, const FieldSchema& schema,
                                            std::string& error) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        error = "not a JSON object";
        return std::nullopt;
    }

    auto fetch = [&](const std::string& canonical) -> const json* {
        auto it = j.find(schema.source_name(canonical));
        return it == j.end() || it->is_null() ? nullptr : &*it;
    };
    auto fetch_string = [&](const std::string& canonical, std::string& out) -> bool {
        const json* v = fetch(canonical);
        if (!v || !v->is_string()) return false;
        out = v->get<std::string>();
        return !out.empty();
    };

    EventRecord e;
    if (!fetch_string("student_id", e.student_id)) {
        error = "missing student_id";
        return std::nullopt;
    }
    if (!fetch_string("unit_id", e.unit_id)) {
        error = "missing unit_id";
        return std::nullopt;
    }

    std::string ts;
    if (!fetch_string("timestamp", ts)) {
        error = "missing timestamp";
        return std::nullopt;
    }
    auto parsed_ts = parse_iso8601_utc(ts);
    if (!parsed_ts) {
        error = "unparseable timestamp '" + ts + "'";
        return std::nullopt;
    }
    e.timestamp = *parsed_ts;

    std::string type_s;
    if (!fetch_string("event_type", type_s)) {
        error = "missing event_type";
        return std::nullopt;
    }
    auto type = event_type_from_string(type_s);
    if (!type) {
        error = "unknown event_type '" + type_s + "'";
        return std::nullopt;
    }
    e.event_type = *type;

    std::string outcome_s;
    if (!fetch_string("outcome", outcome_s)) {
        error = "missing outcome";
        return std::nullopt;
    }
    auto outcome = outcome_from_string(outcome_s);
    if (!outcome) {
        error = "unknown outcome '" + outcome_s + "'";
        return std::nullopt;
    }
    e.outcome = *outcome;
    if (e.event_type == EventType::complete && e.outcome == Outcome::none) {
        error = "complete event without success/fail outcome";
        return std::nullopt;
    }

    const json* dur = fetch("duration_s");
    if (!dur || !dur->is_number()) {
        error = "missing duration_s";
        return std::nullopt;
    }
    e.duration_s = dur->get<double>();
    if (!(e.duration_s >= 0.0)) {
        error = "negative duration_s";
        return std::nullopt;
    }

    if (const json* sid = fetch("session_id"); sid && sid->is_string()) {
        e.session_id = sid->get<std::string>();
    }
    return e;
}

} // namespace

IngestResult parse_event_log(std::istream& input, const FieldSchema& schema) {
    IngestResult result;
    std::map<std::string, std::vector<EventRecord>> per_student;

    std::string line;
    while (std::getline(input, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++result.tally.lines_total;
        std::string error;
        auto event = parse_event_line(line, schema, error);
        if (!event) {
            tally_reject(result.tally, "line " + std::to_string(result.tally.lines_total) + ": " + error);
            continue;
        }
        ++result.tally.accepted;
        per_student[event->student_id].push_back(std::move(*event));
    }

    if (result.tally.lines_total > 0 &&
        static_cast<double>(result.tally.rejected) >
            0.10 * static_cast<double>(result.tally.lines_total)) {
        std::ostringstream msg;
        msg << "event log rejected " << result.tally.rejected << " of " << result.tally.lines_total
            << " lines (>10%)";
        for (const auto& e : result.tally.sample_errors) msg << "; " << e;
        throw PipelineError(msg.str());
    }

    for (auto& [student_id, events] : per_student) {
        Trajectory traj;
        traj.student_id = student_id;
        traj.events = std::move(events);
        std::stable_sort(traj.events.begin(), traj.events.end(),
                         [](const EventRecord& a, const EventRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        result.trajectories.push_back(std::move(traj));
    }
    return result;
}

IngestResult parse_event_log_file(const std::string& path, const FieldSchema& schema) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open event file '" + path + "'");
    return parse_event_log(in, schema);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

std::optional<double> parse_double_cell(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

} // namespace

OutcomeTable parse_outcome_table(std::istream& input) {
    OutcomeTable table;
    std::string line;
    if (!std::getline(input, line)) throw PipelineError("outcome table is empty");

    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    if (!col.count("student_id") || !col.count("posttest")) {
        throw PipelineError("outcome table header must contain student_id and posttest");
    }

    auto cell_at = [](const std::vector<std::string>& cells, std::size_t i) -> std::string {
        return i < cells.size() ? cells[i] : std::string{};
    };

    while (std::getline(input, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++table.tally.lines_total;
        const auto cells = split_csv_line(line);

        OutcomeRecord rec;
        rec.student_id = cell_at(cells, col["student_id"]);
        if (rec.student_id.empty()) {
            tally_reject(table.tally, "row " + std::to_string(table.tally.lines_total) + ": missing student_id");
            continue;
        }
        auto post = parse_double_cell(cell_at(cells, col["posttest"]));
        if (!post) {
            tally_reject(table.tally, "row " + std::to_string(table.tally.lines_total) + ": missing posttest");
            continue;
        }
        rec.posttest = *post;
        if (col.count("pretest")) rec.pretest = parse_double_cell(cell_at(cells, col["pretest"]));
        if (col.count("achievement_level")) {
            if (auto lvl = parse_double_cell(cell_at(cells, col["achievement_level"]))) {
                int level = static_cast<int>(*lvl);
                if (static_cast<double>(level) != *lvl || level < 1 || level > 5) {
                    tally_reject(table.tally, "row " + std::to_string(table.tally.lines_total) +
                                                  ": achievement_level out of range");
                    continue;
                }
                rec.achievement_level = level;
            }
        }

        if (table.records.count(rec.student_id)) ++table.tally.duplicate_warnings;
        table.records[rec.student_id] = rec; // last wins
        ++table.tally.accepted;
    }

    if (table.records.empty()) throw PipelineError("outcome table has no valid rows");
    return table;
}

OutcomeTable parse_outcome_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open outcome file '" + path + "'");
    return parse_outcome_table(in);
}

std::vector<SessionSpan> sessionize(const Trajectory& traj) {
    std::vector<SessionSpan> spans;
    const auto& events = traj.events;
    std::size_t i = 0;
    while (i < events.size()) {
        std::size_t j = i;
        if (events[i].session_id) {
            while (j + 1 < events.size() && events[j + 1].session_id &&
                   *events[j + 1].session_id == *events[i].session_id) {
                ++j;
            }
        }
        SessionSpan span;
        span.first_event = i;
        span.last_event = j;
        span.start_s = static_cast<double>(events[i].timestamp);
        span.end_s = static_cast<double>(events[j].timestamp) + events[j].duration_s;
        spans.push_back(span);
        i = j + 1;
    }
    return spans;
}

void write_event_log(std::ostream& out, const std::vector<Trajectory>& trajectories) {
    for (const auto& traj : trajectories) {
        for (const auto& e : traj.events) {
            ordered_json j;
            j["student_id"] = e.student_id;
            j["timestamp"] = format_iso8601_utc(e.timestamp);
            if (e.session_id) j["session_id"] = *e.session_id;
            j["unit_id"] = e.unit_id;
            j["event_type"] = to_string(e.event_type);
            j["outcome"] = to_string(e.outcome);
            j["duration_s"] = e.duration_s;
            out << j.dump() << '\n';
        }
    }
}

void write_outcome_table(std::ostream& out, const std::map<std::string, OutcomeRecord>& records) {
    out << "student_id,pretest,posttest,achievement_level\n";
    for (const auto& [id, rec] : records) {
        out << id << ',';
        if (rec.pretest) out << json(*rec.pretest).dump();
        out << ',' << json(rec.posttest).dump() << ',';
        if (rec.achievement_level) out << *rec.achievement_level;
        out << '\n';
    }
}

} // namespace edhorizon
