#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace cellmap {

/// LUAD growth patterns plus non-tumor tissue. Declaration order is the class
/// order used by every score vector, model file and confusion matrix.
enum class GrowthPattern : int {
    Lepidic = 0,
    Acinar,
    Papillary,
    Micropapillary,
    Solid,
    NonTumor,
};

inline constexpr std::size_t kNumPatterns = 6;

inline constexpr std::array<GrowthPattern, kNumPatterns> kAllPatterns = {
    GrowthPattern::Lepidic, GrowthPattern::Acinar,         GrowthPattern::Papillary,
    GrowthPattern::Micropapillary, GrowthPattern::Solid,   GrowthPattern::NonTumor,
};

constexpr std::size_t index_of(GrowthPattern p)
{
    return static_cast<std::size_t>(p);
}

constexpr std::string_view to_string(GrowthPattern p)
{
    switch (p) {
    case GrowthPattern::Lepidic:
        return "lepidic";
    case GrowthPattern::Acinar:
        return "acinar";
    case GrowthPattern::Papillary:
        return "papillary";
    case GrowthPattern::Micropapillary:
        return "micropapillary";
    case GrowthPattern::Solid:
        return "solid";
    case GrowthPattern::NonTumor:
        return "non_tumor";
    }
    return "?";
}

constexpr std::optional<GrowthPattern> parse_growth_pattern(std::string_view s)
{
    for (const auto p : kAllPatterns) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

} // namespace cellmap
