#pragma once

#include "cellmap/growth_pattern.hpp"
#include "cellmap/nuclei.hpp"
#include "cellmap/splits.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cellmap {

/// Per-slide nuisance parameters shared by every tile of a slide.
struct SynthStyle {
    double density = 1.0;          // [0.7, 1.3]; scales cell packing
    double rotation = 0.0;         // radians, applied to structured layouts
    double jitter_sigma = 1.5;     // px, isotropic Gaussian on every centroid
    double inflammatory_rate = 4e-5; // background cells per px^2
    double structure_scale = 1.0;  // [0.65, 1.5]; scales alveoli, glands, fronds and tufts
    double stroma = 1.0;           // [0.35, 1.65]; scales connective-cell abundance
};

struct SynthSlideConfig {
    std::string slide_id;
    GrowthPattern pattern = GrowthPattern::Solid;
    std::uint64_t slide_seed = 0;
    double width = 4096.0;  // px at detection magnification
    double height = 4096.0;
    double detection_mag = 20.0;
    double map_mag = 5.0;
    double tile_footprint = 1024.0; // px at detection magnification
    /// Drawn from slide_seed when absent.
    std::optional<SynthStyle> style;
    /// Mean of the per-slide inflammatory rate draw.
    double inflammatory_mean = 4e-5;
};

struct SynthTileLabel {
    int row = 0;
    int col = 0;
    GrowthPattern label = GrowthPattern::Solid;
};

struct SynthSlide {
    SlideMeta meta;
    GrowthPattern pattern = GrowthPattern::Solid;
    SynthStyle style;
    std::vector<NucleusRecord> records;
    std::vector<SynthTileLabel> tiles;
};

/// Style drawn uniformly from the documented nuisance ranges.
SynthStyle draw_style(std::uint64_t slide_seed, double inflammatory_mean = 4e-5);

/// Deterministic point-pattern slide for one growth pattern. Every tile of
/// the grid carries the slide's pattern. Throws DataError when the extent is
/// smaller than one tile footprint.
SynthSlide generate_slide(const SynthSlideConfig& cfg);

struct CohortConfig {
    std::size_t per_class = 3;
    std::uint64_t base_seed = 7;
    double width = 4096.0;
    double height = 4096.0;
    double detection_mag = 20.0;
    double map_mag = 5.0;
    double tile_footprint = 1024.0;
    double inflammatory_mean = 4e-5;

    friend bool operator==(const CohortConfig&, const CohortConfig&) = default;
};

struct Cohort {
    std::vector<SynthSlide> slides;
    Manifest manifest;
};

/// 6 * per_class slides; slide seeds derive from (base_seed, class, index).
Cohort generate_cohort(const CohortConfig& cfg);

/// Writes slides/<id>.json (detector format), slides.csv and manifest.csv
/// under `dir`. Returns per-class tile counts in GrowthPattern order.
std::array<std::size_t, kNumPatterns> write_cohort(const Cohort& cohort, const std::filesystem::path& dir);

/// slides.csv: slide_id,json,width,height,detection_mag,map_mag,pattern.
struct SlideEntry {
    SlideMeta meta;
    std::string json_path; // relative to the slides.csv directory
    std::optional<GrowthPattern> pattern;
};

std::string slides_to_csv(std::span<const SlideEntry> slides);
std::vector<SlideEntry> slides_from_csv(std::string_view text, std::string_view origin = "<memory>");

} // namespace cellmap
