#pragma once

#include "cellmap/growth_pattern.hpp"
#include "cellmap/svm.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>

namespace cellmap {

/// counts[truth][predicted].
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumPatterns>, kNumPatterns> counts{};

    std::size_t total() const;
    std::size_t trace() const;
};

ConfusionMatrix confusion(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted);

/// Fraction of matching labels. Throws DataError on empty or mismatched input.
double accuracy(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted);

struct ClassStats {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Class occurs in the truth or the predictions.
    bool present = false;
};

std::array<ClassStats, kNumPatterns> class_stats(const ConfusionMatrix& cm);

/// Mean F1 over classes present in truth or predictions. Zero denominators
/// give 0 for precision, recall and F1.
double f1_macro(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted);

/// Mann-Whitney AUC: P(s_pos > s_neg) + P(s_pos = s_neg) / 2 over all pairs.
/// Pairs are counted exactly in O(n log n). Throws if either side is empty.
double binary_auc(std::span<const double> positives, std::span<const double> negatives);

/// Unweighted mean of one-vs-rest AUCs over classes with at least one
/// positive and one negative sample. Throws DataError when none qualifies.
double auc_ovr_macro(std::span<const GrowthPattern> truth, std::span<const ScoreVector> scores);

struct EvalReport {
    double accuracy = 0.0;
    double f1_macro = 0.0;
    double aucroc_macro = 0.0;
    std::array<ClassStats, kNumPatterns> per_class{};
    ConfusionMatrix confusion;
    std::size_t n_samples = 0;
};

EvalReport evaluate(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted,
                    std::span<const ScoreVector> scores);

struct MetricSummary {
    double mean = 0.0;
    /// Sample (n - 1) standard deviation; 0 for a single value.
    double stddev = 0.0;
};

MetricSummary summarize(std::span<const double> values);

struct TrialSummary {
    MetricSummary aucroc;
    MetricSummary f1_macro;
    MetricSummary accuracy;
    std::size_t n_reports = 0;
};

TrialSummary aggregate_trials(std::span<const EvalReport> reports);

/// "0.78 ± 0.04" with two decimals.
std::string format_mean_std(const MetricSummary& m);

} // namespace cellmap
