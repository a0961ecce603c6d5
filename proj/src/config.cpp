#include "edhorizon/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edhorizon/core.hpp"
#include "edhorizon/features.hpp"

namespace edhorizon {

using nlohmann::json;
using nlohmann::ordered_json;

FeatureSetSpec FeatureSetSpec::parse(const std::string& label) {
    FeatureSetSpec fs;
    fs.label = label;
    if (label == "short") {
        // defaults
    } else if (label == "pretest") {
        fs.log_features = false;
        fs.include_pretest = true;
    } else if (label == "short+pretest") {
        fs.include_pretest = true;
    } else if (label == "full") {
        fs.at_full_horizon = true;
    } else if (label == "full+pretest") {
        fs.at_full_horizon = true;
        fs.include_pretest = true;
    } else if (label.rfind("single:", 0) == 0) {
        fs.single_feature = label.substr(7);
        expert_feature_index(fs.single_feature); // validates the name
    } else {
        throw PipelineError("unknown feature set label '" + label + "'");
    }
    return fs;
}

namespace {

CohortConfig cohort_from_json(const json& j) {
    CohortConfig c;
    if (j.contains("n_students")) c.n_students = j.at("n_students").get<int>();
    if (j.contains("n_units")) c.n_units = j.at("n_units").get<int>();
    if (j.contains("sessions_per_student"))
        c.sessions_per_student = j.at("sessions_per_student").get<int>();
    if (j.contains("session_minutes_mean"))
        c.session_minutes_mean = j.at("session_minutes_mean").get<double>();
    if (j.contains("session_minutes_sd"))
        c.session_minutes_sd = j.at("session_minutes_sd").get<double>();
    if (j.contains("ability_sd")) c.ability_sd = j.at("ability_sd").get<double>();
    if (j.contains("difficulty_sd")) c.difficulty_sd = j.at("difficulty_sd").get<double>();
    if (j.contains("duration_log_mean"))
        c.duration_log_mean = j.at("duration_log_mean").get<double>();
    if (j.contains("duration_log_sd")) c.duration_log_sd = j.at("duration_log_sd").get<double>();
    if (j.contains("ability_time_scale"))
        c.ability_time_scale = j.at("ability_time_scale").get<double>();
    if (j.contains("posttest_noise_sd"))
        c.posttest_noise_sd = j.at("posttest_noise_sd").get<double>();
    if (j.contains("pretest_noise_sd"))
        c.pretest_noise_sd = j.at("pretest_noise_sd").get<double>();
    if (j.contains("give_up_base")) c.give_up_base = j.at("give_up_base").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

ordered_json cohort_to_json(const CohortConfig& c) {
    ordered_json j;
    j["n_students"] = c.n_students;
    j["n_units"] = c.n_units;
    j["sessions_per_student"] = c.sessions_per_student;
    j["session_minutes_mean"] = c.session_minutes_mean;
    j["session_minutes_sd"] = c.session_minutes_sd;
    j["ability_sd"] = c.ability_sd;
    j["difficulty_sd"] = c.difficulty_sd;
    j["duration_log_mean"] = c.duration_log_mean;
    j["duration_log_sd"] = c.duration_log_sd;
    j["ability_time_scale"] = c.ability_time_scale;
    j["posttest_noise_sd"] = c.posttest_noise_sd;
    j["pretest_noise_sd"] = c.pretest_noise_sd;
    j["give_up_base"] = c.give_up_base;
    j["seed"] = c.seed;
    return j;
}

} // namespace

PipelineConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw PipelineError("config is not a JSON object");

    PipelineConfig cfg;
    if (j.contains("input")) {
        const auto& input = j.at("input");
        cfg.events_path = input.value("events", "");
        cfg.outcomes_path = input.value("outcomes", "");
        if (input.contains("schema")) {
            for (const auto& [source, canonical] : input.at("schema").items()) {
                cfg.schema.source_to_canonical[source] = canonical.get<std::string>();
            }
        }
    }
    if (j.contains("synthetic")) cfg.synthetic = cohort_from_json(j.at("synthetic"));
    if (!cfg.synthetic && (cfg.events_path.empty() || cfg.outcomes_path.empty()))
        throw PipelineError("config needs either input.events/input.outcomes or a synthetic section");

    if (j.contains("clock_mode")) {
        const auto mode = j.at("clock_mode").get<std::string>();
        if (mode == "session_wall_clock") cfg.clock_mode = ClockMode::session_wall_clock;
        else if (mode == "active_time") cfg.clock_mode = ClockMode::active_time;
        else throw PipelineError("unknown clock_mode '" + mode + "'");
    }

    if (j.contains("horizons")) {
        for (const auto& h : j.at("horizons")) {
            if (h.is_number()) cfg.horizons.push_back(HorizonSpec::of_hours(h.get<double>()));
            else cfg.horizons.push_back(HorizonSpec::parse(h.get<std::string>()));
        }
    }
    if (cfg.horizons.empty()) throw PipelineError("config needs a non-empty horizon grid");

    if (j.contains("families")) {
        cfg.families.clear();
        for (const auto& f : j.at("families"))
            cfg.families.push_back(model_family_from_string(f.get<std::string>()));
    }
    if (j.contains("feature_sets")) {
        for (const auto& fs : j.at("feature_sets"))
            cfg.feature_sets.push_back(FeatureSetSpec::parse(fs.get<std::string>()));
    }
    if (cfg.feature_sets.empty()) cfg.feature_sets.push_back(FeatureSetSpec::parse("short"));

    if (j.contains("grids")) {
        const auto& g = j.at("grids");
        if (g.contains("svr")) {
            const auto& svr = g.at("svr");
            if (svr.contains("C")) cfg.grids.svr_C = svr.at("C").get<std::vector<double>>();
            if (svr.contains("epsilon"))
                cfg.grids.svr_epsilon = svr.at("epsilon").get<std::vector<double>>();
            if (svr.contains("gamma")) {
                if (svr.at("gamma").is_string()) {
                    if (svr.at("gamma").get<std::string>() != "auto")
                        throw PipelineError("svr gamma must be a number or \"auto\"");
                    cfg.grids.svr_gamma_auto = true;
                } else {
                    cfg.grids.svr_gamma_auto = false;
                    cfg.grids.svr_gamma = svr.at("gamma").get<double>();
                }
            }
        }
        if (g.contains("forest")) {
            const auto& forest = g.at("forest");
            if (forest.contains("max_depth"))
                cfg.grids.forest_depth = forest.at("max_depth").get<std::vector<int>>();
            if (forest.contains("n_trees"))
                cfg.grids.forest_trees = forest.at("n_trees").get<int>();
        }
    }

    if (j.contains("selection"))
        cfg.selection = grid_selection_from_string(j.at("selection").get<std::string>());
    if (j.contains("k")) cfg.k = j.at("k").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("min_support")) cfg.min_support = j.at("min_support").get<double>();
    if (j.contains("max_patterns")) cfg.max_patterns = j.at("max_patterns").get<std::size_t>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("level_cuts")) {
        cfg.level_cuts = j.at("level_cuts").get<std::vector<double>>();
        if (cfg.level_cuts.size() != 4 ||
            !std::is_sorted(cfg.level_cuts.begin(), cfg.level_cuts.end()))
            throw PipelineError("level_cuts must be 4 ascending numbers");
    }
    if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (cfg.k < 2) throw PipelineError("config k must be >= 2");
    return cfg;
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string PipelineConfig::canonical_json() const {
    ordered_json j;
    ordered_json input;
    input["events"] = events_path;
    input["outcomes"] = outcomes_path;
    ordered_json schema_json = ordered_json::object();
    // std::unordered_map iteration order is not stable; emit sorted.
    std::vector<std::pair<std::string, std::string>> entries(
        schema.source_to_canonical.begin(), schema.source_to_canonical.end());
    std::sort(entries.begin(), entries.end());
    for (const auto& [k, v] : entries) schema_json[k] = v;
    input["schema"] = schema_json;
    j["input"] = input;
    if (synthetic) j["synthetic"] = cohort_to_json(*synthetic);
    j["clock_mode"] = to_string(clock_mode);
    ordered_json horizons_json = ordered_json::array();
    for (const auto& h : horizons) horizons_json.push_back(h.label());
    j["horizons"] = horizons_json;
    ordered_json families_json = ordered_json::array();
    for (const auto& f : families) families_json.push_back(to_string(f));
    j["families"] = families_json;
    ordered_json fs_json = ordered_json::array();
    for (const auto& fs : feature_sets) fs_json.push_back(fs.label);
    j["feature_sets"] = fs_json;
    j["grids"] = {
        {"svr",
         {{"C", grids.svr_C},
          {"epsilon", grids.svr_epsilon},
          {"gamma_auto", grids.svr_gamma_auto},
          {"gamma", grids.svr_gamma}}},
        {"forest", {{"max_depth", grids.forest_depth}, {"n_trees", grids.forest_trees}}},
    };
    j["selection"] = to_string(selection);
    j["k"] = k;
    j["seed"] = seed;
    j["min_support"] = min_support;
    j["max_patterns"] = max_patterns;
    j["alpha"] = alpha;
    j["level_cuts"] = level_cuts;
    return j.dump();
}

} // namespace edhorizon
