#include "edhorizon/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "edhorizon/core.hpp"

namespace edhorizon {

namespace {
constexpr std::size_t kMinPatternLen = 2;
constexpr std::size_t kMaxPatternLen = 4;
const char kSpeedChar[3] = {'g', 'n', 's'};
} // namespace

std::string Token::symbol() const {
    std::string s(2, ' ');
    s[0] = success ? 'S' : 'F';
    s[1] = kSpeedChar[speed];
    return s;
}

Token Token::from_symbol(const std::string& s) {
    if (s.size() != 2 || (s[0] != 'S' && s[0] != 'F'))
        throw PipelineError("bad token symbol '" + s + "'");
    Token t;
    t.success = s[0] == 'S';
    switch (s[1]) {
        case 'g': t.speed = 0; break;
        case 'n': t.speed = 1; break;
        case 's': t.speed = 2; break;
        default: throw PipelineError("bad token symbol '" + s + "'");
    }
    return t;
}

std::vector<Token> tokenize_trajectory(const Trajectory& traj, const PopulationTimeStats& stats) {
    std::vector<Token> tokens;
    tokens.reserve(traj.events.size());
    for (const auto& e : traj.events) {
        if (e.event_type != EventType::attempt) continue;
        Token t;
        t.success = e.outcome == Outcome::success;
        if (e.duration_s <= 2.0) {
            t.speed = 0;
        } else if (e.duration_s <= stats.mean_for_unit(e.unit_id)) {
            t.speed = 1;
        } else {
            t.speed = 2;
        }
        tokens.push_back(t);
    }
    return tokens;
}

std::string PatternSpec::symbol_string() const {
    std::string s;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i) s += '.';
        s += symbols[i].symbol();
    }
    return s;
}

double chi2_statistic(const std::array<std::array<double, 2>, 2>& table) {
    const double r0 = table[0][0] + table[0][1];
    const double r1 = table[1][0] + table[1][1];
    const double c0 = table[0][0] + table[1][0];
    const double c1 = table[0][1] + table[1][1];
    const double n = r0 + r1;
    if (r0 <= 0.0 || r1 <= 0.0 || c0 <= 0.0 || c1 <= 0.0 || n <= 0.0) return 0.0;

    const double e00 = r0 * c0 / n;
    const double e01 = r0 * c1 / n;
    const double e10 = r1 * c0 / n;
    const double e11 = r1 * c1 / n;
    auto term = [](double o, double e) { return (o - e) * (o - e) / e; };
    return term(table[0][0], e00) + term(table[0][1], e01) + term(table[1][0], e10) +
           term(table[1][1], e11);
}

double chi2_critical_value_df1(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PipelineError("alpha must lie in (0,1)");
    // df=1: CDF(x) = erf(sqrt(x/2)); invert by bisection.
    const double target = 1.0 - alpha;
    double lo = 0.0, hi = 200.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::erf(std::sqrt(mid / 2.0)) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

std::string encode(const std::vector<Token>& tokens, std::size_t begin, std::size_t len) {
    std::string key;
    key.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        const Token& t = tokens[begin + i];
        key += t.success ? 'S' : 'F';
        key += kSpeedChar[t.speed];
    }
    return key;
}

std::vector<Token> decode(const std::string& key) {
    std::vector<Token> tokens;
    for (std::size_t i = 0; i + 2 <= key.size(); i += 2) {
        tokens.push_back(Token::from_symbol(key.substr(i, 2)));
    }
    return tokens;
}

} // namespace

std::vector<PatternSpec> mine_frequent_patterns(const std::vector<std::vector<Token>>& sequences,
                                                const std::vector<bool>& below_median,
                                                double min_support) {
    if (sequences.size() != below_median.size())
        throw PipelineError("pattern mining: label count does not match sequence count");

    std::size_t n_low = 0, n_high = 0;
    for (bool b : below_median) (b ? n_low : n_high) += 1;
    if (n_low < 2 || n_high < 2)
        throw PipelineError("pattern mining needs at least 2 students per outcome group");

    // occurrence counts per pattern: a student counts once per pattern.
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts; // key -> (low, high)
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& tokens = sequences[s];
        std::set<std::string> seen;
        for (std::size_t len = kMinPatternLen; len <= kMaxPatternLen; ++len) {
            if (tokens.size() < len) break;
            for (std::size_t begin = 0; begin + len <= tokens.size(); ++begin) {
                seen.insert(encode(tokens, begin, len));
            }
        }
        for (const auto& key : seen) {
            auto& [low, high] = counts[key];
            (below_median[s] ? low : high) += 1;
        }
    }

    std::vector<PatternSpec> candidates;
    for (const auto& [key, occ] : counts) {
        const double support_low = static_cast<double>(occ.first) / static_cast<double>(n_low);
        const double support_high = static_cast<double>(occ.second) / static_cast<double>(n_high);
        if (support_low < min_support && support_high < min_support) continue;

        PatternSpec spec;
        spec.symbols = decode(key);
        spec.support_low = support_low;
        spec.support_high = support_high;
        const double occur_low = static_cast<double>(occ.first);
        const double occur_high = static_cast<double>(occ.second);
        spec.chi2 = chi2_statistic({{{occur_low, occur_high},
                                     {static_cast<double>(n_low) - occur_low,
                                      static_cast<double>(n_high) - occur_high}}});
        candidates.push_back(std::move(spec));
    }
    return candidates;
}

std::vector<PatternSpec> select_top_patterns(std::vector<PatternSpec> candidates, std::size_t k,
                                             double alpha) {
    const double critical = chi2_critical_value_df1(alpha);
    std::erase_if(candidates, [&](const PatternSpec& p) { return !(p.chi2 > critical); });
    std::sort(candidates.begin(), candidates.end(), [](const PatternSpec& a, const PatternSpec& b) {
        if (a.chi2 != b.chi2) return a.chi2 > b.chi2;
        if (a.symbols.size() != b.symbols.size()) return a.symbols.size() < b.symbols.size();
        return a.symbol_string() < b.symbol_string();
    });
    if (candidates.size() > k) candidates.resize(k);
    return candidates;
}

std::vector<double> pattern_indicator_features(const std::vector<Token>& tokens,
                                               const std::vector<PatternSpec>& patterns) {
    std::vector<double> indicators(patterns.size(), 0.0);
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        const auto& sym = patterns[p].symbols;
        if (sym.empty() || sym.size() > tokens.size()) continue;
        for (std::size_t begin = 0; begin + sym.size() <= tokens.size(); ++begin) {
            if (std::equal(sym.begin(), sym.end(), tokens.begin() + begin)) {
                indicators[p] = 1.0;
                break;
            }
        }
    }
    return indicators;
}

std::vector<bool> below_median_labels(const std::vector<double>& scores) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n == 0) return {};
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<bool> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = scores[i] <= median; // ties go below
    return labels;
}

std::string patterns_to_json(const std::vector<PatternSpec>& patterns) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        nlohmann::ordered_json item;
        nlohmann::ordered_json symbols = nlohmann::ordered_json::array();
        for (const auto& t : patterns[i].symbols) symbols.push_back(t.symbol());
        item["symbols"] = symbols;
        item["support_low"] = patterns[i].support_low;
        item["support_high"] = patterns[i].support_high;
        item["chi2"] = patterns[i].chi2;
        item["rank"] = i + 1;
        arr.push_back(item);
    }
    return arr.dump(2);
}

std::vector<PatternSpec> patterns_from_json(const std::string& json_text) {
    const auto parsed = nlohmann::json::parse(json_text);
    std::vector<PatternSpec> patterns;
    for (const auto& item : parsed) {
        PatternSpec spec;
        for (const auto& sym : item.at("symbols")) {
            spec.symbols.push_back(Token::from_symbol(sym.get<std::string>()));
        }
        spec.support_low = item.at("support_low").get<double>();
        spec.support_high = item.at("support_high").get<double>();
        spec.chi2 = item.at("chi2").get<double>();
        patterns.push_back(std::move(spec));
    }
    return patterns;
}

} // namespace edhorizon
