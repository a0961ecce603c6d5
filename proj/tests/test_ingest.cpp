#include <doctest.h>

#include <sstream>

#include "edhorizon/core.hpp"
#include "edhorizon/ingest.hpp"
#include "helpers.hpp"

using namespace edhorizon;
using edhorizon::testing::make_event;

namespace {

std::string line(const std::string& student, const std::string& ts, const std::string& unit,
                 const std::string& outcome, double duration,
                 const std::string& session = std::string()) {
    std::ostringstream os;
    os << R"({"student_id":")" << student << R"(","timestamp":")" << ts << '"';
    if (!session.empty()) os << R"(,"session_id":")" << session << '"';
    os << R"(,"unit_id":")" << unit << R"(","event_type":"attempt","outcome":")" << outcome
       << R"(","duration_s":)" << duration << "}";
    return os.str();
}

} // namespace

TEST_CASE("parse_event_log sorts out-of-order events for one student") {
    std::istringstream input(line("s1", "2023-01-09T09:02:00Z", "a", "fail", 5) + "\n" +
                             line("s1", "2023-01-09T09:00:00Z", "a", "fail", 5) + "\n" +
                             line("s1", "2023-01-09T09:01:00Z", "a", "success", 5) + "\n");
    const auto result = parse_event_log(input);
    REQUIRE(result.trajectories.size() == 1);
    const auto& events = result.trajectories[0].events;
    REQUIRE(events.size() == 3);
    CHECK(events[0].timestamp < events[1].timestamp);
    CHECK(events[1].timestamp < events[2].timestamp);
    CHECK(result.tally.accepted == 3);
    CHECK(result.tally.rejected == 0);
}

TEST_CASE("parse_event_log keeps input order for equal timestamps") {
    std::istringstream input(line("s1", "2023-01-09T09:00:00Z", "first", "fail", 1) + "\n" +
                             line("s1", "2023-01-09T09:00:00Z", "second", "fail", 1) + "\n");
    const auto result = parse_event_log(input);
    REQUIRE(result.trajectories[0].events.size() == 2);
    CHECK(result.trajectories[0].events[0].unit_id == "first");
    CHECK(result.trajectories[0].events[1].unit_id == "second");
}

TEST_CASE("parse_event_log on empty input") {
    std::istringstream input("");
    const auto result = parse_event_log(input);
    CHECK(result.trajectories.empty());
    CHECK(result.tally.lines_total == 0);
    CHECK(result.tally.rejected == 0);
}

TEST_CASE("parse_event_log rejects a negative duration line") {
    std::istringstream input(line("s1", "2023-01-09T09:00:00Z", "a", "success", 5) + "\n" +
                             line("s1", "2023-01-09T09:01:00Z", "a", "fail", -1) + "\n" +
                             line("s1", "2023-01-09T09:02:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:03:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:04:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:05:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:06:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:07:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:08:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:09:00Z", "a", "fail", 2) + "\n" +
                             line("s1", "2023-01-09T09:10:00Z", "a", "fail", 2) + "\n");
    const auto result = parse_event_log(input);
    CHECK(result.trajectories[0].events.size() == 10);
    CHECK(result.tally.rejected == 1);
    CHECK(result.tally.lines_total == 11);
    CHECK(result.tally.accepted + result.tally.rejected == result.tally.lines_total);
}

TEST_CASE("parse_event_log fatal above 10% rejects") {
    std::istringstream input(line("s1", "2023-01-09T09:00:00Z", "a", "success", 5) + "\n" +
                             line("s1", "not-a-time", "a", "fail", 1) + "\n");
    CHECK_THROWS_AS(parse_event_log(input), PipelineError);
}

TEST_CASE("parse_event_log rejects complete events without a result") {
    std::istringstream input(
        R"({"student_id":"s1","timestamp":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"complete","outcome":"none","duration_s":1})"
        "\n" +
        line("s1", "2023-01-09T09:01:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:02:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:03:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:04:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:05:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:06:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:07:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:08:00Z", "a", "success", 5) + "\n" +
        line("s1", "2023-01-09T09:09:00Z", "a", "success", 5) + "\n");
    const auto result = parse_event_log(input);
    CHECK(result.tally.rejected == 1);
}

TEST_CASE("parse_event_log applies the source field mapping") {
    FieldSchema schema;
    schema.source_to_canonical = {{"uid", "student_id"}, {"when", "timestamp"}};
    std::istringstream input(
        R"({"uid":"s9","when":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"attempt","outcome":"fail","duration_s":3})"
        "\n");
    const auto result = parse_event_log(input, schema);
    REQUIRE(result.trajectories.size() == 1);
    CHECK(result.trajectories[0].student_id == "s9");
}

TEST_CASE("parse_event_log round trip is idempotent") {
    std::istringstream input(line("s2", "2023-01-09T09:02:00Z", "b", "fail", 4.5, "x") + "\n" +
                             line("s1", "2023-01-09T09:00:00Z", "a", "success", 2.25) + "\n" +
                             line("s1", "2023-01-09T08:00:00Z", "a", "fail", 1.125) + "\n");
    const auto first = parse_event_log(input);

    std::ostringstream serialized;
    write_event_log(serialized, first.trajectories);
    std::istringstream again(serialized.str());
    const auto second = parse_event_log(again);

    REQUIRE(second.trajectories.size() == first.trajectories.size());
    for (std::size_t t = 0; t < first.trajectories.size(); ++t) {
        const auto& a = first.trajectories[t];
        const auto& b = second.trajectories[t];
        REQUIRE(a.events.size() == b.events.size());
        CHECK(a.student_id == b.student_id);
        for (std::size_t i = 0; i < a.events.size(); ++i) {
            CHECK(a.events[i].timestamp == b.events[i].timestamp);
            CHECK(a.events[i].unit_id == b.events[i].unit_id);
            CHECK(a.events[i].duration_s == b.events[i].duration_s);
            CHECK(a.events[i].outcome == b.events[i].outcome);
            CHECK(a.events[i].session_id == b.events[i].session_id);
        }
    }
}

TEST_CASE("parse_outcome_table optional fields and duplicates") {
    SUBCASE("pretest optional") {
        std::istringstream input("student_id,pretest,posttest,achievement_level\n"
                                 "s1,0.4,0.7,\n"
                                 "s2,,0.5,\n");
        const auto table = parse_outcome_table(input);
        REQUIRE(table.records.size() == 2);
        CHECK(table.records.at("s1").pretest == 0.4);
        CHECK_FALSE(table.records.at("s2").pretest.has_value());
        CHECK(table.records.at("s2").posttest == 0.5);
    }
    SUBCASE("duplicate rows: last wins with a warning") {
        std::istringstream input("student_id,pretest,posttest,achievement_level\n"
                                 "s1,,0.3,\n"
                                 "s1,,0.9,\n");
        const auto table = parse_outcome_table(input);
        CHECK(table.records.at("s1").posttest == 0.9);
        CHECK(table.tally.duplicate_warnings == 1);
    }
    SUBCASE("achievement level out of range is rejected") {
        std::istringstream input("student_id,pretest,posttest,achievement_level\n"
                                 "s1,,0.5,6\n"
                                 "s2,,0.5,3\n");
        const auto table = parse_outcome_table(input);
        CHECK(table.records.count("s1") == 0);
        CHECK(table.records.at("s2").achievement_level == 3);
        CHECK(table.tally.rejected == 1);
    }
    SUBCASE("missing posttest rejects the row; none valid is fatal") {
        std::istringstream input("student_id,pretest,posttest,achievement_level\n"
                                 "s1,0.4,,\n");
        CHECK_THROWS_AS(parse_outcome_table(input), PipelineError);
    }
}

TEST_CASE("sessionize computes the 35-minute two-session fixture") {
    // 09:10-09:25 in session A, 09:40-10:00 in session B, zero durations.
    const std::int64_t t0 = *parse_iso8601_utc("2023-01-09T09:10:00Z");
    Trajectory traj;
    traj.student_id = "s1";
    traj.events = {
        make_event("s1", t0, "a", Outcome::fail, 0, "A"),
        make_event("s1", t0 + 15 * 60, "a", Outcome::fail, 0, "A"),
        make_event("s1", t0 + 30 * 60, "a", Outcome::fail, 0, "B"),
        make_event("s1", t0 + 50 * 60, "a", Outcome::fail, 0, "B"),
    };
    const auto spans = sessionize(traj);
    REQUIRE(spans.size() == 2);
    const double total = spans[0].length_s() + spans[1].length_s();
    CHECK(total == doctest::Approx(35 * 60).epsilon(1e-12));
}

TEST_CASE("sessionize single event span includes its duration") {
    Trajectory traj;
    traj.student_id = "s1";
    traj.events = {make_event("s1", 1000, "a", Outcome::success, 30, "A")};
    const auto spans = sessionize(traj);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].length_s() == doctest::Approx(30.0));
}

TEST_CASE("sessionize without session ids degrades to one span per event") {
    Trajectory traj;
    traj.student_id = "s1";
    traj.events = {make_event("s1", 1000, "a", Outcome::fail, 10),
                   make_event("s1", 2000, "a", Outcome::fail, 10),
                   make_event("s1", 3000, "b", Outcome::success, 10)};
    const auto spans = sessionize(traj);
    CHECK(spans.size() == 3);
}

TEST_CASE("sessionize puts every event in exactly one span") {
    Trajectory traj;
    traj.student_id = "s1";
    traj.events = {make_event("s1", 1000, "a", Outcome::fail, 10, "A"),
                   make_event("s1", 1100, "a", Outcome::fail, 10, "A"),
                   make_event("s1", 1200, "a", Outcome::fail, 10),
                   make_event("s1", 1300, "a", Outcome::fail, 10, "B"),
                   make_event("s1", 1400, "a", Outcome::fail, 10, "A")};
    const auto spans = sessionize(traj);
    std::size_t covered = 0;
    std::size_t expected_next = 0;
    for (const auto& s : spans) {
        CHECK(s.first_event == expected_next);
        covered += s.last_event - s.first_event + 1;
        expected_next = s.last_event + 1;
    }
    CHECK(covered == traj.events.size());
    CHECK(spans.size() == 4); // A-run of 2, bare event, B, then A again
}

TEST_CASE("parser survives arbitrarily damaged lines with consistent tallies") {
    Rng rng(77);
    const char* fragments[] = {
        R"({"student_id":"s1","timestamp":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"attempt","outcome":"fail","duration_s":3})",
        R"({"student_id":"s1")",
        R"(]]]garbage[[[)",
        R"({"student_id":12,"timestamp":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"attempt","outcome":"fail","duration_s":3})",
        R"({"student_id":"s2","timestamp":"tomorrow","unit_id":"a","event_type":"attempt","outcome":"fail","duration_s":3})",
        R"({"student_id":"s2","timestamp":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"ponder","outcome":"fail","duration_s":3})",
        R"({"student_id":"s2","timestamp":"2023-01-09T09:00:00Z","unit_id":"a","event_type":"attempt","outcome":"fail","duration_s":"fast"})",
        "",
        R"({})",
    };
    for (int trial = 0; trial < 30; ++trial) {
        std::ostringstream text;
        std::size_t expected_nonempty = 0;
        for (int i = 0; i < 60; ++i) {
            const auto& frag = fragments[rng.below(std::size(fragments))];
            if (*frag) ++expected_nonempty;
            text << frag << '\n';
        }
        std::istringstream in(text.str());
        try {
            const auto result = parse_event_log(in);
            CHECK(result.tally.lines_total == expected_nonempty);
            CHECK(result.tally.accepted + result.tally.rejected == result.tally.lines_total);
            std::size_t events = 0;
            for (const auto& t : result.trajectories) events += t.events.size();
            CHECK(events == result.tally.accepted);
        } catch (const PipelineError&) {
            // >10% rejects is a legitimate fatal outcome for damaged input
        }
    }
}

TEST_CASE("timestamp parse and format round trip") {
    const std::string iso = "2022-09-01T13:45:10Z";
    const auto parsed = parse_iso8601_utc(iso);
    REQUIRE(parsed.has_value());
    CHECK(format_iso8601_utc(*parsed) == iso);
    CHECK(parse_iso8601_utc("2022-09-01 13:45:10").has_value());
    CHECK(parse_iso8601_utc("2022-09-01T13:45:10.250Z").value() == *parsed);
    CHECK_FALSE(parse_iso8601_utc("09/01/2022").has_value());
    CHECK_FALSE(parse_iso8601_utc("2022-13-01T00:00:00Z").has_value());
}
