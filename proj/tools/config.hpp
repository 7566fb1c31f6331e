#pragma once

#include "cellmap/nuclei.hpp"
#include "cellmap/pipeline.hpp"
#include "cellmap/raster.hpp"
#include "cellmap/splits.hpp"
#include "cellmap/svm.hpp"
#include "cellmap/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace cellmap::cli {

/// Everything a pipeline run can be configured with. Loaded from an INI file
/// with sections [io] [ingest] [raster] [splits] [svm] [synth].
struct PipelineConfig {
    std::filesystem::path root = "run";

    ClassCodeTable codes = ClassCodeTable::pannuke();
    UnknownCodePolicy policy = UnknownCodePolicy::Strict;

    RasterConfig raster;

    std::uint64_t split_seed = 7;
    int trials = 5;
    WsiSplitOptions wsi;
    int k = 5;

    SvmHyperparams svm{200, 0.1, 1e-3, 7};

    CohortConfig synth;

    /// Throws ConfigError on any out-of-range value.
    void validate() const;
    /// Overrides every seed (splits, svm, synth).
    void set_global_seed(std::uint64_t seed);

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Parses and validates INI text; absent keys keep their defaults, unknown
/// keys are errors.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Full INI rendering; parse_config(render_config(c)) == c.
std::string render_config(const PipelineConfig& cfg);

/// "0:unlabeled,1:neoplastic,...".
std::string render_code_table(const ClassCodeTable& table);
ClassCodeTable parse_code_table(std::string_view text);

} // namespace cellmap::cli
