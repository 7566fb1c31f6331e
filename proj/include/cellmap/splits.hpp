#pragma once

#include "cellmap/growth_pattern.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellmap {

struct LabeledTile {
    std::string tile_id;
    std::string slide_id;
    GrowthPattern label = GrowthPattern::NonTumor;

    friend bool operator==(const LabeledTile&, const LabeledTile&) = default;
};

using Manifest = std::vector<LabeledTile>;

/// Manifest CSV: tile_id,slide_id,label.
std::string manifest_to_csv(std::span<const LabeledTile> manifest);
Manifest manifest_from_csv(std::string_view text, std::string_view origin = "<memory>");

enum class SplitPolicy { WsiBased, TileBasedKFold };
enum class Part { Train, Val, Test };

std::string_view to_string(SplitPolicy p);
std::string_view to_string(Part p);

struct PlanEntry {
    LabeledTile tile;
    Part part = Part::Train; // WsiBased only
    int fold = -1;           // TileBasedKFold only

    friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

/// Assignment of every manifest tile, in manifest order.
struct SplitPlan {
    SplitPolicy policy = SplitPolicy::WsiBased;
    std::uint64_t seed = 0;
    int trial = 0;
    int folds = 0; // k for TileBasedKFold, 0 otherwise
    std::vector<PlanEntry> entries;

    friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

struct WsiSplitOptions {
    std::size_t n_test_slides = 6;
    double val_fraction = 0.10;
    std::size_t resample_budget = 10'000;

    friend bool operator==(const WsiSplitOptions&, const WsiSplitOptions&) = default;
};

/// Slide-level split: samples test slides uniformly until their tiles cover
/// all six patterns, then splits the remaining tiles into train/val.
/// The random stream is derived from (seed, trial).
/// Throws InfeasibleSplit when coverage cannot be met within the budget or
/// the manifest cannot spare the requested test slides.
SplitPlan make_wsi_split(std::span<const LabeledTile> manifest, std::uint64_t seed, int trial = 0,
                         const WsiSplitOptions& opts = {});

/// Tile-level k-fold: seeded shuffle, then round-robin deal into k folds.
SplitPlan make_tile_kfold(std::span<const LabeledTile> manifest, int k, std::uint64_t seed, int trial = 0);

/// One train/test pairing within a plan: the WSI test set, or one held-out fold.
struct EvalRound {
    std::string name; // "test" or "fold<i>"
    std::vector<std::size_t> train; // entry indices
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

std::vector<EvalRound> eval_rounds(const SplitPlan& plan);

struct LeakageRow {
    std::string round;
    std::size_t test_tiles = 0;
    /// Test tiles whose slide also contributes a training (or validation) tile.
    std::size_t leaked_tiles = 0;
    std::size_t shared_slides = 0;
};

struct LeakageReport {
    SplitPolicy policy = SplitPolicy::WsiBased;
    int trial = 0;
    std::vector<LeakageRow> rows;

    std::size_t total_leaked() const;
};

/// Checks that `plan` covers `manifest` exactly, then counts slide sharing
/// between each round's test tiles and its training side.
LeakageReport audit_leakage(const SplitPlan& plan, std::span<const LabeledTile> manifest);

std::string leakage_to_csv(std::span<const LeakageReport> reports);

/// CSV: tile_id,slide_id,label,assignment,trial,seed. The assignment is
/// train/val/test or an integer fold index.
std::string plan_to_csv(const SplitPlan& plan);
SplitPlan plan_from_csv(std::string_view text, std::string_view origin = "<memory>");

} // namespace cellmap
