#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "edhorizon/config.hpp"
#include "edhorizon/core.hpp"
#include "edhorizon/eval.hpp"
#include "edhorizon/features.hpp"
#include "edhorizon/horizon.hpp"
#include "edhorizon/ingest.hpp"
#include "edhorizon/models.hpp"
#include "edhorizon/patterns.hpp"
#include "edhorizon/synthgen.hpp"

namespace py = pybind11;
using namespace edhorizon;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols)
            throw PipelineError("matrix rows have inconsistent lengths");
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

std::vector<Token> to_tokens(const std::vector<std::string>& symbols) {
    std::vector<Token> tokens;
    tokens.reserve(symbols.size());
    for (const auto& s : symbols) tokens.push_back(Token::from_symbol(s));
    return tokens;
}

ModelSpec spec_from_dict(ModelFamily family, const py::dict& d) {
    ModelSpec spec;
    spec.family = family;
    if (d.contains("C")) spec.C = d["C"].cast<double>();
    if (d.contains("epsilon")) spec.epsilon = d["epsilon"].cast<double>();
    if (d.contains("gamma")) {
        spec.gamma = d["gamma"].cast<double>();
        spec.gamma_auto = false;
    }
    if (d.contains("max_depth")) spec.max_depth = d["max_depth"].cast<int>();
    if (d.contains("n_trees")) spec.n_trees = d["n_trees"].cast<int>();
    if (d.contains("seed")) spec.seed = d["seed"].cast<std::uint64_t>();
    return spec;
}

py::dict pattern_to_dict(const PatternSpec& p) {
    py::dict d;
    py::list symbols;
    for (const auto& t : p.symbols) symbols.append(t.symbol());
    d["symbols"] = symbols;
    d["support_low"] = p.support_low;
    d["support_high"] = p.support_high;
    d["chi2"] = p.chi2;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Short-horizon student outcome prediction pipeline";

    py::register_exception<PipelineError>(m, "PipelineError");

    py::class_<EventRecord>(m, "EventRecord")
        .def(py::init([](const std::string& student_id, const std::string& timestamp,
                         const std::string& unit_id, const std::string& event_type,
                         const std::string& outcome, double duration_s,
                         std::optional<std::string> session_id) {
                 EventRecord e;
                 e.student_id = student_id;
                 const auto ts = parse_iso8601_utc(timestamp);
                 if (!ts) throw PipelineError("unparseable timestamp '" + timestamp + "'");
                 e.timestamp = *ts;
                 e.unit_id = unit_id;
                 const auto et = event_type_from_string(event_type);
                 if (!et) throw PipelineError("unknown event_type '" + event_type + "'");
                 e.event_type = *et;
                 const auto oc = outcome_from_string(outcome);
                 if (!oc) throw PipelineError("unknown outcome '" + outcome + "'");
                 e.outcome = *oc;
                 e.duration_s = duration_s;
                 e.session_id = std::move(session_id);
                 return e;
             }),
             py::arg("student_id"), py::arg("timestamp"), py::arg("unit_id"),
             py::arg("event_type") = "attempt", py::arg("outcome") = "none",
             py::arg("duration_s") = 0.0, py::arg("session_id") = std::nullopt)
        .def_readonly("student_id", &EventRecord::student_id)
        .def_property_readonly(
            "timestamp", [](const EventRecord& e) { return format_iso8601_utc(e.timestamp); })
        .def_readonly("unit_id", &EventRecord::unit_id)
        .def_readonly("session_id", &EventRecord::session_id)
        .def_readonly("duration_s", &EventRecord::duration_s)
        .def_property_readonly(
            "event_type", [](const EventRecord& e) { return std::string(to_string(e.event_type)); })
        .def_property_readonly(
            "outcome", [](const EventRecord& e) { return std::string(to_string(e.outcome)); });

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](const std::string& student_id, std::vector<EventRecord> events) {
                 Trajectory t;
                 t.student_id = student_id;
                 t.events = std::move(events);
                 return t;
             }),
             py::arg("student_id"), py::arg("events") = std::vector<EventRecord>{})
        .def_readonly("student_id", &Trajectory::student_id)
        .def_readonly("events", &Trajectory::events)
        .def("__len__", [](const Trajectory& t) { return t.events.size(); });

    py::class_<SessionSpan>(m, "SessionSpan")
        .def_readonly("first_event", &SessionSpan::first_event)
        .def_readonly("last_event", &SessionSpan::last_event)
        .def_readonly("start_s", &SessionSpan::start_s)
        .def_readonly("end_s", &SessionSpan::end_s)
        .def("length_s", &SessionSpan::length_s);

    py::class_<ClockedTrajectory>(m, "ClockedTrajectory")
        .def_readonly("trajectory", &ClockedTrajectory::trajectory)
        .def_readonly("cumulative_usage_s", &ClockedTrajectory::cumulative_usage_s);

    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def_readonly("unit_id", &ProblemInstance::unit_id)
        .def_readonly("begin", &ProblemInstance::begin)
        .def_readonly("end", &ProblemInstance::end)
        .def_readonly("success", &ProblemInstance::success)
        .def_readonly("total_time_s", &ProblemInstance::total_time_s)
        .def("attempts", &ProblemInstance::attempts);

    py::class_<PopulationTimeStats>(m, "PopulationTimeStats")
        .def_readonly("unit_mean_s", &PopulationTimeStats::unit_mean_s)
        .def_readonly("global_mean_s", &PopulationTimeStats::global_mean_s)
        .def_readonly("n_attempts", &PopulationTimeStats::n_attempts)
        .def("mean_for_unit", &PopulationTimeStats::mean_for_unit);

    m.def(
        "parse_event_log",
        [](const std::string& text, const std::unordered_map<std::string, std::string>& schema) {
            FieldSchema fs;
            fs.source_to_canonical = schema;
            std::istringstream in(text);
            const auto result = parse_event_log(in, fs);
            py::dict tally;
            tally["lines_total"] = result.tally.lines_total;
            tally["accepted"] = result.tally.accepted;
            tally["rejected"] = result.tally.rejected;
            return py::make_tuple(result.trajectories, tally);
        },
        py::arg("text"), py::arg("schema") = std::unordered_map<std::string, std::string>{},
        "Parse JSON-Lines event text into per-student trajectories.");

    m.def("sessionize", &sessionize, py::arg("trajectory"));

    m.def(
        "build_usage_clock",
        [](const Trajectory& t, const std::string& mode) {
            if (mode == "active_time") return build_usage_clock(t, ClockMode::active_time);
            if (mode == "session_wall_clock")
                return build_usage_clock(t, ClockMode::session_wall_clock);
            throw PipelineError("unknown clock mode '" + mode + "'");
        },
        py::arg("trajectory"), py::arg("mode") = "session_wall_clock");

    m.def(
        "truncate_to_horizon",
        [](const ClockedTrajectory& ct, const std::string& horizon) {
            return truncate_to_horizon(ct, HorizonSpec::parse(horizon));
        },
        py::arg("clocked"), py::arg("horizon"));

    m.def("segment_problems", &segment_problems, py::arg("trajectory"));
    m.def(
        "compute_population_time_stats",
        [](const std::vector<Trajectory>& training) {
            return compute_population_time_stats(training, "python");
        },
        py::arg("training"));
    m.def("expert_feature_names", []() {
        return std::vector<std::string>(expert_feature_names().begin(),
                                        expert_feature_names().end());
    });
    m.def(
        "extract_expert_features",
        [](const Trajectory& t, const PopulationTimeStats& stats, double horizon_s) {
            const auto f = extract_expert_features(t, stats, horizon_s);
            return std::vector<double>(f.begin(), f.end());
        },
        py::arg("trajectory"), py::arg("stats"), py::arg("horizon_s"));

    m.def(
        "tokenize_trajectory",
        [](const Trajectory& t, const PopulationTimeStats& stats) {
            std::vector<std::string> symbols;
            for (const auto& token : tokenize_trajectory(t, stats))
                symbols.push_back(token.symbol());
            return symbols;
        },
        py::arg("trajectory"), py::arg("stats"));

    m.def(
        "chi2_statistic",
        [](double occur_low, double occur_high, double absent_low, double absent_high) {
            return chi2_statistic({{{occur_low, occur_high}, {absent_low, absent_high}}});
        },
        py::arg("occur_low"), py::arg("occur_high"), py::arg("absent_low"),
        py::arg("absent_high"));

    m.def(
        "mine_top_patterns",
        [](const std::vector<std::vector<std::string>>& sequences,
           const std::vector<bool>& below_median, double min_support, std::size_t k,
           double alpha) {
            std::vector<std::vector<Token>> token_sequences;
            token_sequences.reserve(sequences.size());
            for (const auto& s : sequences) token_sequences.push_back(to_tokens(s));
            const auto selected = select_top_patterns(
                mine_frequent_patterns(token_sequences, below_median, min_support), k, alpha);
            py::list out;
            for (const auto& p : selected) out.append(pattern_to_dict(p));
            return out;
        },
        py::arg("sequences"), py::arg("below_median"), py::arg("min_support") = 0.2,
        py::arg("k") = 10, py::arg("alpha") = 0.05,
        "Mine frequent contiguous patterns and keep the top chi-squared ones.");

    m.def(
        "pattern_indicator_features",
        [](const std::vector<std::string>& tokens,
           const std::vector<std::vector<std::string>>& patterns) {
            std::vector<PatternSpec> specs;
            for (const auto& p : patterns) {
                PatternSpec spec;
                spec.symbols = to_tokens(p);
                specs.push_back(std::move(spec));
            }
            return pattern_indicator_features(to_tokens(tokens), specs);
        },
        py::arg("tokens"), py::arg("patterns"));

    m.def("below_median_labels", &below_median_labels, py::arg("scores"));

    py::class_<TrainedPredictor>(m, "Predictor")
        .def_property_readonly(
            "family", [](const TrainedPredictor& p) { return std::string(to_string(p.family)); })
        .def_readonly("feature_names", &TrainedPredictor::feature_names)
        .def_readonly("convergence_warning", &TrainedPredictor::convergence_warning)
        .def(
            "predict",
            [](const TrainedPredictor& p, const std::vector<std::vector<double>>& X) {
                return p.predict(to_matrix(X));
            },
            py::arg("X"))
        .def("to_json", [](const TrainedPredictor& p) { return predictor_to_json(p); })
        .def_static("from_json",
                    [](const std::string& text) { return predictor_from_json(text); });

    m.def(
        "fit",
        [](const std::string& family, const std::vector<std::vector<double>>& X,
           const std::vector<double>& y, const py::dict& spec) {
            const ModelFamily f = model_family_from_string(family);
            return fit_family(f, to_matrix(X), y, spec_from_dict(f, spec));
        },
        py::arg("family"), py::arg("X"), py::arg("y"), py::arg("spec") = py::dict{},
        "Fit one of: linear, svr, forest, baseline.");

    m.def("rf_feature_importance", &rf_feature_importance, py::arg("predictor"));

    m.def(
        "compute_metrics",
        [](const std::vector<double>& pred, const std::vector<double>& actual) {
            const auto metrics = compute_metrics(pred, actual);
            py::dict d;
            d["rmse"] = metrics.rmse;
            d["r2"] = metrics.r2;
            d["r2_cod"] = metrics.r2_cod;
            return d;
        },
        py::arg("pred"), py::arg("actual"));

    m.def(
        "normalize_outcomes",
        [](const std::vector<double>& raw) {
            NormalizationInfo info;
            const auto scaled = normalize_outcomes(raw, &info);
            return py::make_tuple(scaled, info.min, info.max);
        },
        py::arg("raw"));

    m.def(
        "kfold_assign",
        [](std::vector<std::string> ids, int k, std::uint64_t seed) {
            return kfold_assign(std::move(ids), k, seed).assignment;
        },
        py::arg("student_ids"), py::arg("k") = 5, py::arg("seed") = 0);

    m.def(
        "generate_cohort_files",
        [](const std::string& config_json, const std::string& events_path,
           const std::string& outcomes_path) {
            const auto cfg =
                config_from_json_text("{\"synthetic\":" + config_json +
                                      ",\"horizons\":[\"full\"]}");
            write_cohort(generate_cohort(*cfg.synthetic), events_path, outcomes_path);
        },
        py::arg("cohort_config_json") = "{}", py::arg("events_path") = "events.jsonl",
        py::arg("outcomes_path") = "outcomes.csv",
        "Write a seeded synthetic cohort in the ingest formats.");

    m.def(
        "run_experiment",
        [](const std::string& config_json, bool write_outputs) {
            const auto cfg = config_from_json_text(config_json);
            const auto result = run_experiment(cfg, write_outputs);
            py::dict out;
            py::list cells;
            for (const auto& cell : result.cells) {
                py::dict c;
                c["horizon"] = cell.horizon_label;
                c["family"] = std::string(to_string(cell.family));
                c["feature_set"] = cell.feature_set;
                c["rmse_mean"] = cell.rmse_mean;
                c["rmse_se"] = cell.rmse_se;
                c["r2_mean"] = cell.r2_mean;
                c["r2_se"] = cell.r2_se;
                c["r2_cod_mean"] = cell.r2_cod_mean;
                c["quintile_precision"] = cell.quintile.precision;
                c["feature_names"] = cell.feature_names;
                c["importance"] = cell.importance;
                cells.append(c);
            }
            out["cells"] = cells;
            out["n_students"] = result.n_students;
            out["runtime_s"] = result.runtime_s;
            out["manifest_json"] = result.manifest_json;
            return out;
        },
        py::arg("config_json"), py::arg("write_outputs") = false,
        "Run the full cross-validated experiment from a config JSON string.");
}
