#pragma once

#include "cellmap/growth_pattern.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellmap {

struct Sample {
    std::vector<double> x;
    GrowthPattern y = GrowthPattern::Lepidic;
};

/// Per-feature z-scoring fitted on training data. Stored deviations are
/// floored at kStdFloor so constant features map to 0.
struct Standardizer {
    static constexpr double kStdFloor = 1e-8;

    std::vector<double> mean;
    std::vector<double> stddev;

    /// Population mean and standard deviation per column.
    static Standardizer fit(std::span<const Sample> samples);

    std::vector<double> transform(std::span<const double> x) const;
    std::vector<Sample> transform(std::span<const Sample> samples) const;
    bool empty() const { return mean.empty(); }

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct SvmHyperparams {
    int epochs = 200;
    double eta0 = 0.1;
    double lambda = 1e-3;
    std::uint64_t seed = 0;

    friend bool operator==(const SvmHyperparams&, const SvmHyperparams&) = default;
};

using ScoreVector = std::array<double, kNumPatterns>;

/// One-vs-rest linear SVM over the six patterns, in GrowthPattern order.
struct LinearSvmModel {
    std::size_t dim = 0;
    std::array<std::vector<double>, kNumPatterns> weights;
    std::array<double, kNumPatterns> bias{};
    SvmHyperparams params;
    /// Applied by score_raw / predict_raw; empty means inputs are used as is.
    Standardizer standardizer;

    friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

/// Regularized hinge objective of one binary problem:
/// lambda/2 |w|^2 + mean_i max(0, 1 - y_i (w.x_i + b)), y_i = +1 iff sample is `positive`.
double binary_objective(std::span<const double> w, double b, std::span<const Sample> data, GrowthPattern positive,
                        double lambda);

struct Subgradient {
    std::vector<double> w;
    double b = 0.0;
};

/// Subgradient of binary_objective; points exactly on the hinge contribute 0.
Subgradient binary_subgradient(std::span<const double> w, double b, std::span<const Sample> data,
                               GrowthPattern positive, double lambda);

/// Objective of every class problem after every epoch: [class][epoch].
using ObjectiveTrace = std::array<std::vector<double>, kNumPatterns>;

/// Trains each one-vs-rest problem by epoch SGD over a seeded shuffle with
/// step eta0 / (1 + lambda t), t counting steps. The returned weights are
/// the running mean of all iterates. Inputs should already be standardized.
/// Throws DataError with fewer than two distinct labels or non-finite input.
LinearSvmModel fit(std::span<const Sample> data, const SvmHyperparams& hp, ObjectiveTrace* trace = nullptr);

/// Fits a Standardizer on `raw`, trains on the transformed data and stores
/// the standardizer in the model.
LinearSvmModel fit_standardized(std::span<const Sample> raw, const SvmHyperparams& hp);

/// Margins w_c.x + b_c for already-standardized x.
ScoreVector score(const LinearSvmModel& model, std::span<const double> x);
/// Argmax of score; ties go to the lowest class index.
GrowthPattern predict(const LinearSvmModel& model, std::span<const double> x);
GrowthPattern argmax(const ScoreVector& s);

ScoreVector score_raw(const LinearSvmModel& model, std::span<const double> raw);
GrowthPattern predict_raw(const LinearSvmModel& model, std::span<const double> raw);

std::string save_model(const LinearSvmModel& model);
LinearSvmModel load_model(std::string_view text);

} // namespace cellmap
