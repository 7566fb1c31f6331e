#pragma once

#include "cellmap/nuclei.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cellmap {

inline constexpr std::size_t kNumFeatures = 12;

/// Cell types summarized by FeatureVector, in column order.
inline constexpr std::array<CellClass, 4> kFeatureClassOrder = {
    CellClass::Neoplastic, CellClass::NonNeoplasticEpithelial, CellClass::Connective, CellClass::Inflammatory};

/// Per cell type (see kFeatureClassOrder): count, max and min pairwise
/// centroid distance. Distances are 0 when fewer than two cells are present.
struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double count(std::size_t class_slot) const { return values[3 * class_slot]; }
    double max_dist(std::size_t class_slot) const { return values[3 * class_slot + 1]; }
    double min_dist(std::size_t class_slot) const { return values[3 * class_slot + 2]; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Column names f1..f12 in FeatureVector order, e.g. "neoplastic_count".
const std::array<std::string, kNumFeatures>& feature_names();

struct DistanceExtremes {
    double max = 0.0;
    double min = 0.0;
};

/// Exact max/min Euclidean distance over unordered pairs; zeros for n < 2.
DistanceExtremes pairwise_extremes(std::span<const MapPoint> points);

FeatureVector extract_features(std::span<const NucleusRecord> records);

/// Records with centroid in [col*S, (col+1)*S) x [row*S, (row+1)*S),
/// translated so the footprint origin is (0, 0).
std::vector<NucleusRecord> window_records(std::span<const NucleusRecord> records, int row, int col, double footprint);

} // namespace cellmap
