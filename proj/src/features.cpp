#include "cellmap/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cellmap {

const std::array<std::string, kNumFeatures>& feature_names()
{
    static const std::array<std::string, kNumFeatures> names = [] {
        std::array<std::string, kNumFeatures> n;
        for (std::size_t c = 0; c < kFeatureClassOrder.size(); ++c) {
            const std::string stem(to_string(kFeatureClassOrder[c]));
            n[3 * c + 0] = stem + "_count";
            n[3 * c + 1] = stem + "_max_dist";
            n[3 * c + 2] = stem + "_min_dist";
        }
        return n;
    }();
    return names;
}

DistanceExtremes pairwise_extremes(std::span<const MapPoint> points)
{
    if (points.size() < 2) {
        return {};
    }
    // sqrt is correctly rounded and monotone, so extremes of squared
    // distances give bit-exact extremes of distances.
    double max2 = 0.0;
    double min2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double dx = points[i].x - points[j].x;
            const double dy = points[i].y - points[j].y;
            const double d2 = dx * dx + dy * dy;
            max2 = std::max(max2, d2);
            min2 = std::min(min2, d2);
        }
    }
    return {std::sqrt(max2), std::sqrt(min2)};
}

FeatureVector extract_features(std::span<const NucleusRecord> records)
{
    std::array<std::vector<MapPoint>, kFeatureClassOrder.size()> by_class;
    for (const auto& r : records) {
        const auto slot = std::find(kFeatureClassOrder.begin(), kFeatureClassOrder.end(), r.cell_class);
        if (slot != kFeatureClassOrder.end()) {
            by_class[static_cast<std::size_t>(slot - kFeatureClassOrder.begin())].push_back({r.x, r.y});
        }
    }
    FeatureVector fv;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto ext = pairwise_extremes(by_class[c]);
        fv.values[3 * c + 0] = static_cast<double>(by_class[c].size());
        fv.values[3 * c + 1] = ext.max;
        fv.values[3 * c + 2] = ext.min;
    }
    return fv;
}

std::vector<NucleusRecord> window_records(std::span<const NucleusRecord> records, int row, int col, double footprint)
{
    const double x0 = col * footprint;
    const double y0 = row * footprint;
    const double x1 = (col + 1) * footprint;
    const double y1 = (row + 1) * footprint;
    std::vector<NucleusRecord> out;
    for (const auto& r : records) {
        if (r.x >= x0 && r.x < x1 && r.y >= y0 && r.y < y1) {
            auto local = r;
            local.x -= x0;
            local.y -= y0;
            out.push_back(local);
        }
    }
    return out;
}

} // namespace cellmap
