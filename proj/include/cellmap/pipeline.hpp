#pragma once

#include "cellmap/features.hpp"
#include "cellmap/metrics.hpp"
#include "cellmap/splits.hpp"
#include "cellmap/svm.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellmap {

/// Runs fn(0..n-1) on up to `jobs` threads. Each index must write only its
/// own output slot; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Available hardware threads, at least 1.
std::size_t default_jobs();

struct TileKey {
    std::string slide_id;
    int row = 0;
    int col = 0;
};

/// Splits `{slide}_r{row}_c{col}`.
std::optional<TileKey> parse_tile_id(std::string_view tile_id);

struct TileFeatures {
    std::string tile_id;
    std::string slide_id;
    GrowthPattern label = GrowthPattern::NonTumor;
    FeatureVector features;
};

/// Features of the given tiles of one slide (records at detection magnification).
std::vector<TileFeatures> featurize_slide(std::span<const NucleusRecord> records, std::span<const LabeledTile> tiles,
                                          double footprint);

/// tile_id,slide_id,label followed by the twelve named feature columns.
std::string features_to_csv(std::span<const TileFeatures> rows);
std::vector<TileFeatures> features_from_csv(std::string_view text, std::string_view origin = "<memory>");

struct ScoredTile {
    std::string tile_id;
    ScoreVector scores{};
    GrowthPattern predicted = GrowthPattern::Lepidic;
};

/// tile_id, one column per pattern, predicted.
std::string scores_to_csv(std::span<const ScoredTile> rows);
std::vector<ScoredTile> scores_from_csv(std::string_view text, std::string_view origin = "<memory>");

struct PlanTraining {
    std::vector<LinearSvmModel> models; // one per evaluation round
    std::vector<ScoredTile> scores;     // every test tile of every round
};

/// Trains one standardized SVM per evaluation round of `plan` on its train
/// tiles and scores its test tiles.
PlanTraining train_on_plan(const SplitPlan& plan, std::span<const TileFeatures> features, const SvmHyperparams& hp);

struct RoundReport {
    std::string round;
    EvalReport report;
};

/// Scores every round's test tiles against the plan labels. Throws
/// DataError when a test tile has no score row.
std::vector<RoundReport> evaluate_plan(const SplitPlan& plan, std::span<const ScoredTile> scores);

/// plan,policy,round,n,aucroc,f1_macro,accuracy plus per-class F1 columns.
std::string round_reports_to_csv(std::span<const RoundReport> rows, std::string_view plan_label, SplitPolicy policy);
std::string confusion_to_csv(const ConfusionMatrix& cm);

struct ProtocolOptions {
    std::uint64_t seed = 7;
    int trials = 5;
    WsiSplitOptions wsi;
    int k = 5;
    SvmHyperparams svm;
    std::size_t jobs = 1;
};

struct ProtocolResult {
    std::vector<SplitPlan> wsi_plans;
    std::vector<EvalReport> wsi_trials;
    SplitPlan kfold_plan;
    std::vector<EvalReport> kfold_folds;
};

/// Strong validation (WSI-based trials) and weak validation (tile k-fold)
/// of the feature SVM over one feature table.
ProtocolResult run_protocols(std::span<const TileFeatures> features, const ProtocolOptions& opts);

} // namespace cellmap
