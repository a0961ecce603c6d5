#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "edhorizon/types.hpp"

namespace edhorizon {

/// Maps source field names to canonical EventRecord field names, so logs
/// from different platforms ingest through one schema. Canonical fields
/// without a mapping are read under their own name.
struct FieldSchema {
    std::unordered_map<std::string, std::string> source_to_canonical;

    /// Source name that feeds the given canonical field.
    std::string source_name(const std::string& canonical) const;
};

struct ParseTally {
    std::size_t lines_total = 0; ///< non-empty input lines
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t duplicate_warnings = 0;
    std::vector<std::string> sample_errors; ///< first few reject reasons
};

struct IngestResult {
    std::vector<Trajectory> trajectories; ///< sorted by student_id
    ParseTally tally;
};

/// Parses JSON-Lines events. Malformed lines are rejected and tallied;
/// more than 10% rejected lines is fatal. Events are grouped per student
/// and stably sorted by timestamp (input order breaks ties).
IngestResult parse_event_log(std::istream& input, const FieldSchema& schema = {});
IngestResult parse_event_log_file(const std::string& path, const FieldSchema& schema = {});

struct OutcomeTable {
    std::map<std::string, OutcomeRecord> records;
    ParseTally tally;
};

/// Parses the outcome CSV (header `student_id,pretest,posttest,achievement_level`,
/// empty cell = absent). Duplicate student rows: last wins with a warning tally.
OutcomeTable parse_outcome_table(std::istream& input);
OutcomeTable parse_outcome_table_file(const std::string& path);

/// Contiguous stretch of same-session events: [start, end] with
/// end = last event timestamp + last event duration.
struct SessionSpan {
    std::size_t first_event = 0;
    std::size_t last_event = 0;
    double start_s = 0.0;
    double end_s = 0.0;

    double length_s() const { return end_s - start_s; }
};

/// Maximal groups of equal consecutive session_id; events without a
/// session_id become singleton spans (active-time semantics).
std::vector<SessionSpan> sessionize(const Trajectory& traj);

/// Canonical JSONL writer for trajectories (one event per line, events in
/// trajectory order). parse(serialize(parse(x))) == parse(x).
void write_event_log(std::ostream& out, const std::vector<Trajectory>& trajectories);
void write_outcome_table(std::ostream& out, const std::map<std::string, OutcomeRecord>& records);

} // namespace edhorizon
