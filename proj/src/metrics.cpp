#include "cellmap/metrics.hpp"

#include "cellmap/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace cellmap {

namespace {

void check_lengths(std::size_t a, std::size_t b)
{
    if (a != b) {
        throw DataError("metrics: length mismatch (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
    if (a == 0) {
        throw DataError("metrics: no samples");
    }
}

} // namespace

std::size_t ConfusionMatrix::total() const
{
    std::size_t n = 0;
    for (const auto& row : counts) {
        for (const auto v : row) {
            n += v;
        }
    }
    return n;
}

std::size_t ConfusionMatrix::trace() const
{
    std::size_t n = 0;
    for (std::size_t i = 0; i < kNumPatterns; ++i) {
        n += counts[i][i];
    }
    return n;
}

ConfusionMatrix confusion(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted)
{
    check_lengths(truth.size(), predicted.size());
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
    }
    return cm;
}

double accuracy(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted)
{
    check_lengths(truth.size(), predicted.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += truth[i] == predicted[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::array<ClassStats, kNumPatterns> class_stats(const ConfusionMatrix& cm)
{
    std::array<ClassStats, kNumPatterns> out{};
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        std::size_t tp = cm.counts[c][c];
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t o = 0; o < kNumPatterns; ++o) {
            if (o != c) {
                fp += cm.counts[o][c];
                fn += cm.counts[c][o];
            }
        }
        auto& s = out[c];
        s.present = tp + fp + fn > 0;
        s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    }
    return out;
}

double f1_macro(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted)
{
    const auto stats = class_stats(confusion(truth, predicted));
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : stats) {
        if (s.present) {
            sum += s.f1;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

double binary_auc(std::span<const double> positives, std::span<const double> negatives)
{
    if (positives.empty() || negatives.empty()) {
        throw DataError("auc: need at least one positive and one negative");
    }
    std::vector<double> neg(negatives.begin(), negatives.end());
    std::sort(neg.begin(), neg.end());
    // Twice the Mann-Whitney U: 2 per win, 1 per tie.
    std::uint64_t twice_u = 0;
    for (const double p : positives) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(lo, neg.end(), p);
        twice_u += 2 * static_cast<std::uint64_t>(lo - neg.begin()) + static_cast<std::uint64_t>(hi - lo);
    }
    const double pairs = static_cast<double>(positives.size()) * static_cast<double>(negatives.size());
    return static_cast<double>(twice_u) / (2.0 * pairs);
}

double auc_ovr_macro(std::span<const GrowthPattern> truth, std::span<const ScoreVector> scores)
{
    check_lengths(truth.size(), scores.size());
    double sum = 0.0;
    std::size_t eligible = 0;
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        pos.clear();
        neg.clear();
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (!std::isfinite(scores[i][c])) {
                throw DataError("auc: non-finite score");
            }
            (index_of(truth[i]) == c ? pos : neg).push_back(scores[i][c]);
        }
        if (pos.empty() || neg.empty()) {
            continue;
        }
        sum += binary_auc(pos, neg);
        ++eligible;
    }
    if (eligible == 0) {
        throw DataError("auc: no class has both positive and negative samples");
    }
    return sum / static_cast<double>(eligible);
}

EvalReport evaluate(std::span<const GrowthPattern> truth, std::span<const GrowthPattern> predicted,
                    std::span<const ScoreVector> scores)
{
    EvalReport r;
    r.confusion = confusion(truth, predicted);
    r.per_class = class_stats(r.confusion);
    r.n_samples = truth.size();
    r.accuracy = accuracy(truth, predicted);
    r.f1_macro = f1_macro(truth, predicted);
    r.aucroc_macro = auc_ovr_macro(truth, scores);
    return r;
}

MetricSummary summarize(std::span<const double> values)
{
    if (values.empty()) {
        throw DataError("aggregate: no values");
    }
    MetricSummary m;
    for (const double v : values) {
        m.mean += v;
    }
    m.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) {
            ss += (v - m.mean) * (v - m.mean);
        }
        m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

TrialSummary aggregate_trials(std::span<const EvalReport> reports)
{
    if (reports.empty()) {
        throw DataError("aggregate: no reports");
    }
    std::vector<double> auc;
    std::vector<double> f1;
    std::vector<double> acc;
    for (const auto& r : reports) {
        auc.push_back(r.aucroc_macro);
        f1.push_back(r.f1_macro);
        acc.push_back(r.accuracy);
    }
    return {summarize(auc), summarize(f1), summarize(acc), reports.size()};
}

std::string format_mean_std(const MetricSummary& m)
{
    return fmt::format("{:.2f} ± {:.2f}", m.mean, m.stddev);
}

} // namespace cellmap
