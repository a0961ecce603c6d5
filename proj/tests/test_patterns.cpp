#include <doctest.h>

#include <cmath>

#include "edhorizon/core.hpp"
#include "edhorizon/patterns.hpp"
#include "helpers.hpp"

using namespace edhorizon;
using edhorizon::testing::make_trajectory;

namespace {

PopulationTimeStats flat_stats(double mean) {
    PopulationTimeStats stats;
    stats.global_mean_s = mean;
    stats.n_attempts = 1;
    return stats;
}

std::vector<Token> tokens_of(const std::string& symbols) {
    // "Fn.Fn.Sg" -> tokens
    std::vector<Token> out;
    for (std::size_t i = 0; i + 1 < symbols.size(); i += 3) {
        out.push_back(Token::from_symbol(symbols.substr(i, 2)));
    }
    return out;
}

} // namespace

TEST_CASE("tokenize applies outcome and speed classes") {
    const auto traj = make_trajectory("s1", {{"A", Outcome::success, 1.5},
                                             {"A", Outcome::fail, 10.0},
                                             {"A", Outcome::fail, 30.0}});
    const auto tokens = tokenize_trajectory(traj, flat_stats(10.0));
    REQUIRE(tokens.size() == 3);
    CHECK(tokens[0].symbol() == "Sg"); // 1.5 s within the 2 s guess bound
    CHECK(tokens[1].symbol() == "Fn"); // exactly the mean is still `n`
    CHECK(tokens[2].symbol() == "Fs");
}

TEST_CASE("tokenize skips completion events and empty trajectories") {
    Trajectory traj;
    traj.student_id = "s1";
    CHECK(tokenize_trajectory(traj, flat_stats(5)).empty());

    traj.events.push_back(edhorizon::testing::make_event("s1", 0, "A", Outcome::success, 3,
                                                         std::nullopt, EventType::complete));
    traj.events.push_back(edhorizon::testing::make_event("s1", 60, "A", Outcome::fail, 3));
    const auto tokens = tokenize_trajectory(traj, flat_stats(5));
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0].symbol() == "Fn");
}

TEST_CASE("chi2 statistic closed-form values") {
    CHECK(std::abs(chi2_statistic({{{20, 5}, {5, 20}}}) - 18.0) <= 1e-9);
    CHECK(chi2_statistic({{{10, 10}, {10, 10}}}) == 0.0);
    CHECK(std::abs(chi2_statistic({{{10, 0}, {0, 10}}}) - 20.0) <= 1e-9);
}

TEST_CASE("chi2 statistic zero marginals give zero") {
    CHECK(chi2_statistic({{{0, 0}, {5, 5}}}) == 0.0);
    CHECK(chi2_statistic({{{5, 0}, {5, 0}}}) == 0.0);
    CHECK(chi2_statistic({{{0, 0}, {0, 0}}}) == 0.0);
}

TEST_CASE("chi2 statistic symmetric under simultaneous row and column swap") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = static_cast<double>(rng.below(40));
        const double b = static_cast<double>(rng.below(40));
        const double c = static_cast<double>(rng.below(40));
        const double d = static_cast<double>(rng.below(40));
        const double direct = chi2_statistic({{{a, b}, {c, d}}});
        const double swapped = chi2_statistic({{{d, c}, {b, a}}});
        CHECK(std::abs(direct - swapped) <= 1e-9);
    }
}

TEST_CASE("df=1 critical value") {
    CHECK(std::abs(chi2_critical_value_df1(0.05) - 3.841458820694124) < 1e-6);
    CHECK(std::abs(chi2_critical_value_df1(0.01) - 6.634896601021215) < 1e-6);
}

TEST_CASE("mining finds the group-separating pattern") {
    std::vector<std::vector<Token>> sequences;
    std::vector<bool> below;
    for (int i = 0; i < 10; ++i) {
        sequences.push_back(tokens_of("Fn.Fn.Fn"));
        below.push_back(true);
    }
    for (int i = 0; i < 10; ++i) {
        sequences.push_back(tokens_of("Sn.Sn.Sn"));
        below.push_back(false);
    }
    const auto candidates = mine_frequent_patterns(sequences, below, 0.2);

    bool found = false;
    for (const auto& c : candidates) {
        if (c.symbol_string() == "Fn.Fn") {
            found = true;
            CHECK(c.support_low == doctest::Approx(1.0));
            CHECK(c.support_high == doctest::Approx(0.0));
            CHECK(std::abs(c.chi2 - 20.0) <= 1e-9); // [[10,0],[0,10]]
        }
    }
    CHECK(found);

    const auto selected = select_top_patterns(candidates, 10, 0.05);
    CHECK(!selected.empty());
    CHECK(selected.size() <= 10);
    for (std::size_t i = 1; i < selected.size(); ++i) {
        CHECK(selected[i - 1].chi2 >= selected[i].chi2);
    }
    for (const auto& p : selected) {
        CHECK(std::abs(p.support_low - p.support_high) > 0.0);
    }
}

TEST_CASE("impossible support yields no candidates") {
    std::vector<std::vector<Token>> sequences(4, tokens_of("Fn.Fn"));
    const std::vector<bool> below = {true, true, false, false};
    CHECK(mine_frequent_patterns(sequences, below, 1.1).empty());
}

TEST_CASE("identical sequences in both groups have equal supports and chi2 zero") {
    std::vector<std::vector<Token>> sequences(6, tokens_of("Sg.Fn.Ss"));
    const std::vector<bool> below = {true, true, true, false, false, false};
    const auto candidates = mine_frequent_patterns(sequences, below, 0.2);
    CHECK(!candidates.empty());
    for (const auto& c : candidates) {
        CHECK(c.support_low == doctest::Approx(c.support_high));
        CHECK(c.chi2 == doctest::Approx(0.0));
    }
    CHECK(select_top_patterns(candidates, 10, 0.05).empty());
}

TEST_CASE("mining requires two students per group") {
    std::vector<std::vector<Token>> sequences(3, tokens_of("Fn.Fn"));
    const std::vector<bool> below = {true, false, false};
    CHECK_THROWS_AS(mine_frequent_patterns(sequences, below, 0.2), PipelineError);
}

TEST_CASE("selection caps at k and breaks ties deterministically") {
    std::vector<PatternSpec> candidates;
    for (int i = 0; i < 15; ++i) {
        PatternSpec p;
        p.symbols = tokens_of(i % 2 == 0 ? "Fn.Fn" : "Sg.Sg.Sg");
        p.support_low = 0.9;
        p.support_high = 0.1;
        p.chi2 = 10.0 + i;
        candidates.push_back(p);
    }
    const auto selected = select_top_patterns(candidates, 10, 0.05);
    REQUIRE(selected.size() == 10);
    for (std::size_t i = 1; i < selected.size(); ++i)
        CHECK(selected[i - 1].chi2 >= selected[i].chi2);

    // pure ties: shorter first, then lexicographic
    std::vector<PatternSpec> ties;
    for (const char* s : {"Sg.Sg.Sg", "Fn.Fn", "Fg.Fg"}) {
        PatternSpec p;
        p.symbols = tokens_of(s);
        p.chi2 = 9.0;
        ties.push_back(p);
    }
    const auto ordered = select_top_patterns(ties, 10, 0.05);
    REQUIRE(ordered.size() == 3);
    CHECK(ordered[0].symbol_string() == "Fg.Fg");
    CHECK(ordered[1].symbol_string() == "Fn.Fn");
    CHECK(ordered[2].symbol_string() == "Sg.Sg.Sg");
}

TEST_CASE("low-chi2 candidates are excluded") {
    PatternSpec p;
    p.symbols = tokens_of("Fn.Fn");
    p.chi2 = 0.0;
    CHECK(select_top_patterns({p}, 10, 0.05).empty());
    p.chi2 = 18.0;
    const auto kept = select_top_patterns({p}, 10, 0.05);
    REQUIRE(kept.size() == 1);
}

TEST_CASE("pattern indicators") {
    const auto patterns = select_top_patterns({}, 10, 0.05);
    CHECK(pattern_indicator_features({}, patterns).empty());

    PatternSpec fnfn;
    fnfn.symbols = tokens_of("Fn.Fn");
    PatternSpec longp;
    longp.symbols = tokens_of("Fn.Fn.Fn.Fn");

    const auto tokens = tokens_of("Sn.Fn.Fn");
    const auto ind = pattern_indicator_features(tokens, {fnfn, longp});
    REQUIRE(ind.size() == 2);
    CHECK(ind[0] == 1.0); // contiguous containment
    CHECK(ind[1] == 0.0); // longer than the sequence

    CHECK(pattern_indicator_features({}, {fnfn}) == std::vector<double>{0.0});
}

TEST_CASE("median split sends ties below") {
    const auto labels = below_median_labels({0.1, 0.5, 0.5, 0.9});
    CHECK(labels == std::vector<bool>{true, true, true, false});
    const auto odd = below_median_labels({0.3, 0.5, 0.7});
    CHECK(odd == std::vector<bool>{true, true, false});
}

TEST_CASE("patterns serialize to JSON and back") {
    PatternSpec p;
    p.symbols = tokens_of("Fn.Sg.Fs");
    p.support_low = 0.75;
    p.support_high = 0.25;
    p.chi2 = 7.5;
    const auto json_text = patterns_to_json({p});
    const auto parsed = patterns_from_json(json_text);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].symbol_string() == "Fn.Sg.Fs");
    CHECK(parsed[0].support_low == doctest::Approx(0.75));
    CHECK(parsed[0].chi2 == doctest::Approx(7.5));
}

TEST_CASE("mining depends only on training inputs") {
    std::vector<std::vector<Token>> sequences;
    std::vector<bool> below;
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        std::vector<Token> seq;
        for (int j = 0; j < 12; ++j) {
            Token t;
            t.success = rng.bernoulli(0.5);
            t.speed = static_cast<std::uint8_t>(rng.below(3));
            seq.push_back(t);
        }
        sequences.push_back(seq);
        below.push_back(i < 10);
    }
    const auto a = mine_frequent_patterns(sequences, below, 0.2);
    const auto b = mine_frequent_patterns(sequences, below, 0.2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].symbol_string() == b[i].symbol_string());
        CHECK(a[i].chi2 == b[i].chi2);
        CHECK(a[i].support_low == b[i].support_low);
        CHECK(a[i].support_high == b[i].support_high);
    }
}
