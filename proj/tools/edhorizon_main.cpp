#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edhorizon/config.hpp"
#include "edhorizon/core.hpp"
#include "edhorizon/eval.hpp"
#include "edhorizon/features.hpp"
#include "edhorizon/horizon.hpp"
#include "edhorizon/ingest.hpp"
#include "edhorizon/models.hpp"
#include "edhorizon/patterns.hpp"
#include "edhorizon/synthgen.hpp"

namespace fs = std::filesystem;
using namespace edhorizon;

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    std::string output;
};

PipelineConfig resolve_config(const CommonArgs& args) {
    PipelineConfig cfg = load_config_file(args.config_path);
    if (args.seed_set) {
        cfg.seed = args.seed;
        if (cfg.synthetic) cfg.synthetic->seed = args.seed;
    }
    if (args.jobs > 0) cfg.jobs = args.jobs;
    if (!args.output.empty()) cfg.output_dir = args.output;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot write '" + path.string() + "'");
    out << content;
}

/// Whole-dataset featurization used by the staged commands (the
/// cross-validated runs inside `evaluate` re-derive per-fold artifacts).
struct StageFeatures {
    PopulationTimeStats stats;
    std::vector<PatternSpec> patterns;
    std::vector<std::string> names;
    std::vector<std::string> ids;
    Matrix X;
};

StageFeatures stage_featurize(const PipelineConfig& cfg, const LoadedCohort& loaded,
                              const HorizonSpec& horizon) {
    // Join on students that have both logs and outcomes, in sorted id order.
    std::vector<const Trajectory*> trajs;
    std::vector<double> posttest_raw;
    for (const auto& t : loaded.trajectories) {
        auto it = loaded.outcomes.find(t.student_id);
        if (it == loaded.outcomes.end()) continue;
        trajs.push_back(&t);
        posttest_raw.push_back(it->second.posttest);
    }
    if (trajs.size() < 2) throw PipelineError("fewer than 2 students with both logs and outcomes");

    StageFeatures out;
    std::vector<Trajectory> truncated;
    std::vector<double> sentinel;
    for (const auto* t : trajs) {
        const auto clocked = build_usage_clock(*t, cfg.clock_mode);
        truncated.push_back(truncate_to_horizon(clocked, horizon));
        double total_active = 0.0;
        for (const auto& e : t->events) total_active += e.duration_s;
        sentinel.push_back(horizon.full ? total_active : horizon.seconds());
        out.ids.push_back(t->student_id);
    }

    out.stats = compute_population_time_stats(truncated, "stage,horizon=" + horizon.label());
    std::vector<std::vector<Token>> tokens;
    for (const auto& t : truncated) tokens.push_back(tokenize_trajectory(t, out.stats));
    const auto labels = below_median_labels(normalize_outcomes(posttest_raw));
    const auto candidates = mine_frequent_patterns(tokens, labels, cfg.min_support);
    out.patterns = select_top_patterns(candidates, cfg.max_patterns, cfg.alpha);

    out.names.assign(expert_feature_names().begin(), expert_feature_names().end());
    for (const auto& p : out.patterns) out.names.push_back("pattern_" + p.symbol_string());

    out.X = Matrix(truncated.size(), out.names.size());
    for (std::size_t i = 0; i < truncated.size(); ++i) {
        const auto expert = extract_expert_features(truncated[i], out.stats, sentinel[i]);
        for (std::size_t j = 0; j < kNumExpertFeatures; ++j) out.X(i, j) = expert[j];
        const auto indicators = pattern_indicator_features(tokens[i], out.patterns);
        for (std::size_t j = 0; j < indicators.size(); ++j)
            out.X(i, kNumExpertFeatures + j) = indicators[j];
    }
    return out;
}

std::string features_csv(const StageFeatures& f) {
    std::ostringstream csv;
    csv << "student_id";
    for (const auto& name : f.names) csv << ',' << name;
    csv << '\n';
    for (std::size_t i = 0; i < f.X.rows; ++i) {
        csv << f.ids[i];
        for (std::size_t j = 0; j < f.X.cols; ++j) {
            csv << ',' << nlohmann::json(f.X(i, j)).dump();
        }
        csv << '\n';
    }
    return csv.str();
}

int cmd_ingest(const PipelineConfig& cfg) {
    if (cfg.events_path.empty() || cfg.outcomes_path.empty())
        throw PipelineError("ingest needs input.events and input.outcomes in the config");
    const auto events = parse_event_log_file(cfg.events_path, cfg.schema);
    const auto outcomes = parse_outcome_table_file(cfg.outcomes_path);

    std::ostringstream normalized;
    write_event_log(normalized, events.trajectories);
    write_file(fs::path(cfg.output_dir) / "normalized_events.jsonl", normalized.str());

    nlohmann::ordered_json summary;
    summary["students"] = events.trajectories.size();
    summary["events_accepted"] = events.tally.accepted;
    summary["events_rejected"] = events.tally.rejected;
    summary["outcome_rows"] = outcomes.records.size();
    summary["outcome_rejected"] = outcomes.tally.rejected;
    summary["outcome_duplicates"] = outcomes.tally.duplicate_warnings;
    summary["reject_samples"] = events.tally.sample_errors;
    write_file(fs::path(cfg.output_dir) / "ingest_summary.json", summary.dump(2) + "\n");

    std::printf("ingest: %zu students, %zu events accepted, %zu rejected, %zu outcome rows\n",
                events.trajectories.size(), events.tally.accepted, events.tally.rejected,
                outcomes.records.size());
    return 0;
}

int cmd_synth(const PipelineConfig& cfg) {
    if (!cfg.synthetic) throw PipelineError("synth needs a synthetic section in the config");
    const auto cohort = generate_cohort(*cfg.synthetic);
    fs::create_directories(cfg.output_dir);
    const auto events_path = (fs::path(cfg.output_dir) / "events.jsonl").string();
    const auto outcomes_path = (fs::path(cfg.output_dir) / "outcomes.csv").string();
    write_cohort(cohort, events_path, outcomes_path);
    std::size_t n_events = 0;
    for (const auto& t : cohort.trajectories) n_events += t.events.size();
    std::printf("synth: %zu students, %zu events -> %s, %s\n", cohort.trajectories.size(),
                n_events, events_path.c_str(), outcomes_path.c_str());
    return 0;
}

int cmd_featurize(const PipelineConfig& cfg) {
    const auto loaded = load_input(cfg);
    std::size_t emitted = 0;
    for (const auto& h : cfg.horizons) {
        const auto features = stage_featurize(cfg, loaded, h);
        write_file(fs::path(cfg.output_dir) / ("features_" + h.label() + ".csv"),
                   features_csv(features));
        ++emitted;
    }
    std::printf("featurize: %zu horizon feature tables in %s\n", emitted, cfg.output_dir.c_str());
    return 0;
}

int cmd_mine_patterns(const PipelineConfig& cfg) {
    const auto loaded = load_input(cfg);
    std::size_t total = 0;
    for (const auto& h : cfg.horizons) {
        const auto features = stage_featurize(cfg, loaded, h);
        write_file(fs::path(cfg.output_dir) / ("patterns_" + h.label() + ".json"),
                   patterns_to_json(features.patterns) + "\n");
        total += features.patterns.size();
    }
    std::printf("mine-patterns: %zu patterns across %zu horizons in %s\n", total,
                cfg.horizons.size(), cfg.output_dir.c_str());
    return 0;
}

/// Reads a features_<h>.csv produced by `featurize`.
StageFeatures read_features_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw PipelineError("cannot open '" + path.string() + "'; run `featurize` first");
    StageFeatures f;
    std::string line;
    if (!std::getline(in, line)) throw PipelineError("empty feature file " + path.string());
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    while (std::getline(header, cell, ',')) f.names.push_back(cell);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::getline(row, cell, ',');
        f.ids.push_back(cell);
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() != f.names.size())
            throw PipelineError("malformed feature row in " + path.string());
        rows.push_back(std::move(values));
    }
    f.X = Matrix(rows.size(), f.names.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < f.names.size(); ++j) f.X(i, j) = rows[i][j];
    return f;
}

int cmd_train(const PipelineConfig& cfg) {
    const auto loaded = load_input(cfg);
    std::size_t written = 0;
    for (const auto& h : cfg.horizons) {
        const auto features = read_features_csv(fs::path(cfg.output_dir) /
                                                ("features_" + h.label() + ".csv"));
        std::vector<double> posttest_raw;
        for (const auto& id : features.ids) {
            auto it = loaded.outcomes.find(id);
            if (it == loaded.outcomes.end())
                throw PipelineError("feature file references unknown student '" + id + "'");
            posttest_raw.push_back(it->second.posttest);
        }
        const auto y = normalize_outcomes(posttest_raw);

        for (const auto family : cfg.families) {
            const std::uint64_t seed =
                mix_seed(cfg.seed, fnv1a64(h.label() + "|" + to_string(family) + "|train"));
            GridSearchResult gs = grid_search(family, features.X, y, cfg.grids,
                                              GridSelection::nested, seed);
            gs.predictor.feature_names = features.names;
            gs.predictor.horizon_label = h.label();
            gs.predictor.fold_id = "all";
            write_file(fs::path(cfg.output_dir) /
                           ("model_" + h.label() + "_" + to_string(family) + ".json"),
                       predictor_to_json(gs.predictor) + "\n");
            ++written;
        }
    }
    std::printf("train: %zu model files in %s\n", written, cfg.output_dir.c_str());
    return 0;
}

int cmd_evaluate(const PipelineConfig& cfg) {
    const auto result = run_experiment(cfg, true);
    const auto manifest = nlohmann::json::parse(result.manifest_json);
    std::printf("evaluate: %zu report cells, %zu students, %.1fs, manifest %s\n",
                result.cells.size(), result.n_students, result.runtime_s,
                manifest.at("manifest_hash").get<std::string>().c_str());
    return 0;
}

int cmd_report(const PipelineConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    std::ifstream metrics(dir / "metrics.csv");
    if (!metrics)
        throw PipelineError("no metrics.csv in '" + dir.string() + "'; run `evaluate` first");
    std::string line;
    std::getline(metrics, line); // header
    std::printf("%-8s %-9s %-16s %-18s %s\n", "horizon", "family", "feature_set", "rmse",
                "r2");
    std::size_t rows = 0;
    while (std::getline(metrics, line)) {
        std::stringstream row(line);
        std::vector<std::string> cells;
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() < 7) continue;
        std::printf("%-8s %-9s %-16s %s (%s)      %s (%s)\n", cells[0].c_str(), cells[1].c_str(),
                    cells[2].c_str(), cells[3].c_str(), cells[4].c_str(), cells[5].c_str(),
                    cells[6].c_str());
        ++rows;
    }
    std::ifstream manifest(dir / "manifest.json");
    std::string hash = "?";
    if (manifest) {
        const auto j = nlohmann::json::parse(manifest, nullptr, false);
        if (!j.is_discarded() && j.contains("manifest_hash"))
            hash = j.at("manifest_hash").get<std::string>();
    }
    std::printf("report: %zu rows from %s (manifest %s)\n", rows, dir.string().c_str(),
                hash.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Short-horizon student outcome prediction pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string command;
    for (const auto& name : {"ingest", "synth", "featurize", "mine-patterns", "train",
                             "evaluate", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config_path, "pipeline config JSON")
            ->required();
        auto* seed_opt = sub->add_option("--seed", args.seed, "override the config seed");
        sub->add_option("--jobs", args.jobs, "worker parallelism");
        sub->add_option("--output", args.output, "override the output directory");
        sub->callback([&, name, seed_opt]() {
            command = name;
            args.seed_set = seed_opt->count() > 0;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    PipelineConfig cfg;
    try {
        cfg = resolve_config(args);
    } catch (const PipelineError& e) {
        std::fprintf(stderr, "config error: %s\nrun with --help for usage\n", e.what());
        return 2;
    }

    try {
        if (command == "ingest") return cmd_ingest(cfg);
        if (command == "synth") return cmd_synth(cfg);
        if (command == "featurize") return cmd_featurize(cfg);
        if (command == "mine-patterns") return cmd_mine_patterns(cfg);
        if (command == "train") return cmd_train(cfg);
        if (command == "evaluate") return cmd_evaluate(cfg);
        if (command == "report") return cmd_report(cfg);
        std::fprintf(stderr, "unknown command\n");
        return 2;
    } catch (const PipelineError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
