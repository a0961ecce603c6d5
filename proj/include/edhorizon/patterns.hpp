#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edhorizon/features.hpp"
#include "edhorizon/types.hpp"

namespace edhorizon {

/// Outcome/speed class of one attempt event. Six symbols: S or F crossed
/// with g (<= 2 s), n (<= per-unit mean), s (> per-unit mean).
struct Token {
    bool success = false;
    std::uint8_t speed = 0; ///< 0 = g, 1 = n, 2 = s

    bool operator==(const Token&) const = default;
    bool operator<(const Token& o) const {
        // Lexicographic on symbol text: 'F' < 'S', then 'g' < 'n' < 's'.
        if (success != o.success) return !success;
        return speed < o.speed;
    }

    std::string symbol() const; ///< "Sg", "Fn", ...
    static Token from_symbol(const std::string& s);
};

/// One token per attempt event; completion events are excluded. Speed
/// thresholds match the expert features (2 s guess, per-unit mean).
std::vector<Token> tokenize_trajectory(const Trajectory& traj, const PopulationTimeStats& stats);

/// A mined contiguous token subsequence with its per-group occurrence
/// fractions (below-/above-median post-test groups) and chi-squared score.
struct PatternSpec {
    std::vector<Token> symbols; ///< length 2..4
    double support_low = 0.0;
    double support_high = 0.0;
    double chi2 = 0.0;

    std::string symbol_string() const; ///< "Fn.Fn.Sg"
};

/// Pearson chi-squared statistic of a 2x2 occurrence-by-group table
/// [[occur_low, occur_high], [absent_low, absent_high]], no continuity
/// correction. Returns 0 when any marginal is 0.
double chi2_statistic(const std::array<std::array<double, 2>, 2>& table);

/// df=1 chi-squared critical value at the given significance level.
double chi2_critical_value_df1(double alpha);

/// Enumerates all contiguous token subsequences of length 2..4 and keeps
/// those whose occurrence fraction (a student counts once) reaches
/// min_support in at least one outcome group. `below_median[i]` labels
/// sequence i; both groups need at least 2 students.
std::vector<PatternSpec> mine_frequent_patterns(const std::vector<std::vector<Token>>& sequences,
                                                const std::vector<bool>& below_median,
                                                double min_support);

/// Keeps candidates whose chi2 exceeds the df=1 critical value at alpha,
/// ranks by chi2 descending (ties: shorter pattern, then lexicographic
/// symbols) and returns at most k.
std::vector<PatternSpec> select_top_patterns(std::vector<PatternSpec> candidates,
                                             std::size_t k = 10, double alpha = 0.05);

/// indicator[i] = 1 iff patterns[i] occurs as a contiguous subsequence.
std::vector<double> pattern_indicator_features(const std::vector<Token>& tokens,
                                               const std::vector<PatternSpec>& patterns);

/// Median split of training scores: ties go to the below group.
std::vector<bool> below_median_labels(const std::vector<double>& scores);

std::string patterns_to_json(const std::vector<PatternSpec>& patterns);
std::vector<PatternSpec> patterns_from_json(const std::string& json_text);

} // namespace edhorizon
