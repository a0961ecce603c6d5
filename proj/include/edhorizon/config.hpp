#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edhorizon/horizon.hpp"
#include "edhorizon/ingest.hpp"
#include "edhorizon/models.hpp"
#include "edhorizon/synthgen.hpp"

namespace edhorizon {

/// Which columns enter the design matrix for one report row.
///   short         expert + pattern features at the row's horizon
///   pretest       pretest score only
///   short+pretest expert + pattern features plus pretest
///   full          expert + pattern features at the FULL horizon
///   full+pretest  same plus pretest
///   single:<name> one named expert feature
struct FeatureSetSpec {
    std::string label;
    bool log_features = true;
    bool at_full_horizon = false;
    bool include_pretest = false;
    std::string single_feature; ///< non-empty for single:<name>

    static FeatureSetSpec parse(const std::string& label);
};

/// One archivable experiment definition: inputs, clocks, horizons, model
/// grids, feature sets, folds and seeds.
struct PipelineConfig {
    // Input: either file paths or a synthetic cohort spec.
    std::string events_path;
    std::string outcomes_path;
    FieldSchema schema;
    std::optional<CohortConfig> synthetic;

    ClockMode clock_mode = ClockMode::session_wall_clock;
    std::vector<HorizonSpec> horizons;
    std::vector<ModelFamily> families{ModelFamily::linear, ModelFamily::svr,
                                      ModelFamily::forest, ModelFamily::baseline};
    std::vector<FeatureSetSpec> feature_sets;
    Grids grids;
    GridSelection selection = GridSelection::nested;
    int k = 5;
    std::uint64_t seed = 0;
    double min_support = 0.2;
    std::size_t max_patterns = 10;
    double alpha = 0.05;
    std::vector<double> level_cuts{0.2, 0.4, 0.6, 0.8}; ///< score -> achievement level
    std::string output_dir = "out";
    int jobs = 1;

    /// Stable serialized form used for the manifest config hash.
    std::string canonical_json() const;
};

PipelineConfig load_config_file(const std::string& path);
PipelineConfig config_from_json_text(const std::string& text);

} // namespace edhorizon
