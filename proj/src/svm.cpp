#include "cellmap/svm.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"
#include "cellmap/rng.hpp"

#include <algorithm>
#include <bitset>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cellmap {

namespace {

void check_finite(std::span<const double> x)
{
    for (const double v : x) {
        if (!std::isfinite(v)) {
            throw DataError("svm: non-finite feature value");
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

constexpr std::string_view kMagic = "cellmap-linear-svm 1";

std::string join(std::span<const double> v)
{
    std::string out;
    for (const double x : v) {
        out += ' ';
        out += csv::format_double(x);
    }
    return out;
}

std::vector<std::string> tokens(const std::string& line)
{
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) {
        out.push_back(tok);
    }
    return out;
}

} // namespace

Standardizer Standardizer::fit(std::span<const Sample> samples)
{
    if (samples.empty()) {
        throw DataError("standardizer: no samples");
    }
    const auto dim = samples.front().x.size();
    Standardizer s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (const auto& smp : samples) {
        if (smp.x.size() != dim) {
            throw DataError("standardizer: ragged feature rows");
        }
        check_finite(smp.x);
        for (std::size_t j = 0; j < dim; ++j) {
            s.mean[j] += smp.x[j];
        }
    }
    const auto n = static_cast<double>(samples.size());
    for (auto& m : s.mean) {
        m /= n;
    }
    for (const auto& smp : samples) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = smp.x[j] - s.mean[j];
            s.stddev[j] += d * d;
        }
    }
    for (auto& sd : s.stddev) {
        sd = std::max(std::sqrt(sd / n), kStdFloor);
    }
    return s;
}

std::vector<double> Standardizer::transform(std::span<const double> x) const
{
    if (x.size() != mean.size()) {
        throw DataError("standardizer: dimension mismatch");
    }
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = (x[j] - mean[j]) / stddev[j];
    }
    return out;
}

std::vector<Sample> Standardizer::transform(std::span<const Sample> samples) const
{
    std::vector<Sample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back({transform(s.x), s.y});
    }
    return out;
}

double binary_objective(std::span<const double> w, double b, std::span<const Sample> data, GrowthPattern positive,
                        double lambda)
{
    double loss = 0.0;
    for (const auto& s : data) {
        const double y = s.y == positive ? 1.0 : -1.0;
        loss += std::max(0.0, 1.0 - y * (dot(w, s.x) + b));
    }
    const double n = data.empty() ? 1.0 : static_cast<double>(data.size());
    return 0.5 * lambda * dot(w, w) + loss / n;
}

Subgradient binary_subgradient(std::span<const double> w, double b, std::span<const Sample> data,
                               GrowthPattern positive, double lambda)
{
    Subgradient g;
    g.w.assign(w.size(), 0.0);
    for (const auto& s : data) {
        const double y = s.y == positive ? 1.0 : -1.0;
        if (y * (dot(w, s.x) + b) < 1.0) {
            for (std::size_t j = 0; j < w.size(); ++j) {
                g.w[j] -= y * s.x[j];
            }
            g.b -= y;
        }
    }
    const double n = data.empty() ? 1.0 : static_cast<double>(data.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
        g.w[j] = g.w[j] / n + lambda * w[j];
    }
    g.b /= n;
    return g;
}

LinearSvmModel fit(std::span<const Sample> data, const SvmHyperparams& hp, ObjectiveTrace* trace)
{
    if (data.empty()) {
        throw DataError("svm: empty training set");
    }
    if (hp.epochs < 0 || !(hp.eta0 > 0.0) || !(hp.lambda > 0.0)) {
        throw ConfigError("svm: need epochs >= 0, eta0 > 0, lambda > 0");
    }
    const auto dim = data.front().x.size();
    std::bitset<kNumPatterns> labels;
    for (const auto& s : data) {
        if (s.x.size() != dim) {
            throw DataError("svm: ragged feature rows");
        }
        check_finite(s.x);
        labels.set(index_of(s.y));
    }
    if (labels.count() < 2) {
        throw DataError("svm: training set needs at least two distinct labels");
    }

    LinearSvmModel model;
    model.dim = dim;
    model.params = hp;
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        const auto positive = kAllPatterns[c];
        std::vector<double> w(dim, 0.0);
        double b = 0.0;
        // Running mean of every iterate; this is the model that is traced and returned.
        std::vector<double> w_avg(dim, 0.0);
        double b_avg = 0.0;
        Rng rng(derive_seed(hp.seed, {c}));
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::uint64_t t = 0;
        for (int epoch = 0; epoch < hp.epochs; ++epoch) {
            shuffle(std::span(order), rng);
            for (const auto i : order) {
                const auto& s = data[i];
                const double y = s.y == positive ? 1.0 : -1.0;
                const double eta = hp.eta0 / (1.0 + hp.lambda * static_cast<double>(t));
                const bool active = y * (dot(w, s.x) + b) < 1.0;
                const double shrink = 1.0 - eta * hp.lambda;
                for (std::size_t j = 0; j < dim; ++j) {
                    w[j] = shrink * w[j] + (active ? eta * y * s.x[j] : 0.0);
                }
                if (active) {
                    b += eta * y;
                }
                ++t;
                const double k = 1.0 / static_cast<double>(t);
                for (std::size_t j = 0; j < dim; ++j) {
                    w_avg[j] += (w[j] - w_avg[j]) * k;
                }
                b_avg += (b - b_avg) * k;
            }
            if (trace) {
                (*trace)[c].push_back(binary_objective(w_avg, b_avg, data, positive, hp.lambda));
            }
        }
        model.weights[c] = std::move(w_avg);
        model.bias[c] = b_avg;
    }
    return model;
}

LinearSvmModel fit_standardized(std::span<const Sample> raw, const SvmHyperparams& hp)
{
    auto st = Standardizer::fit(raw);
    const auto data = st.transform(raw);
    auto model = fit(data, hp);
    model.standardizer = std::move(st);
    return model;
}

ScoreVector score(const LinearSvmModel& model, std::span<const double> x)
{
    if (x.size() != model.dim) {
        throw DataError("svm: expected " + std::to_string(model.dim) + " features, got " + std::to_string(x.size()));
    }
    check_finite(x);
    ScoreVector s{};
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        s[c] = dot(model.weights[c], x) + model.bias[c];
    }
    return s;
}

GrowthPattern argmax(const ScoreVector& s)
{
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c) {
        if (s[c] > s[best]) {
            best = c;
        }
    }
    return kAllPatterns[best];
}

GrowthPattern predict(const LinearSvmModel& model, std::span<const double> x)
{
    return argmax(score(model, x));
}

ScoreVector score_raw(const LinearSvmModel& model, std::span<const double> raw)
{
    if (model.standardizer.empty()) {
        return score(model, raw);
    }
    return score(model, model.standardizer.transform(raw));
}

GrowthPattern predict_raw(const LinearSvmModel& model, std::span<const double> raw)
{
    return argmax(score_raw(model, raw));
}

std::string save_model(const LinearSvmModel& model)
{
    std::string out(kMagic);
    out += '\n';
    out += "classes";
    for (const auto p : kAllPatterns) {
        out += ' ';
        out += to_string(p);
    }
    out += "\ndim " + std::to_string(model.dim) + '\n';
    out += "epochs " + std::to_string(model.params.epochs) + '\n';
    out += "eta0 " + csv::format_double(model.params.eta0) + '\n';
    out += "lambda " + csv::format_double(model.params.lambda) + '\n';
    out += "seed " + std::to_string(model.params.seed) + '\n';
    out += "mean" + join(model.standardizer.mean) + '\n';
    out += "std" + join(model.standardizer.stddev) + '\n';
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        out += "class ";
        out += to_string(kAllPatterns[c]);
        out += ' ' + csv::format_double(model.bias[c]) + join(model.weights[c]) + '\n';
    }
    return out;
}

LinearSvmModel load_model(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string line;
    auto next = [&](std::string_view key) {
        if (!std::getline(in, line)) {
            throw DataError("model: truncated before '" + std::string(key) + "'");
        }
        auto tok = tokens(line);
        if (tok.empty() || tok.front() != key) {
            throw DataError("model: expected '" + std::string(key) + "' line, got '" + line + "'");
        }
        tok.erase(tok.begin());
        return tok;
    };
    auto numbers = [](const std::vector<std::string>& tok, std::size_t from) {
        std::vector<double> v;
        for (std::size_t i = from; i < tok.size(); ++i) {
            v.push_back(csv::parse_double(tok[i]));
        }
        return v;
    };

    if (!std::getline(in, line) || line != kMagic) {
        throw DataError("model: bad header");
    }
    const auto classes = next("classes");
    if (classes.size() != kNumPatterns) {
        throw DataError("model: expected six classes");
    }
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        if (classes[c] != to_string(kAllPatterns[c])) {
            throw DataError("model: class order mismatch at '" + classes[c] + "'");
        }
    }
    LinearSvmModel m;
    m.dim = static_cast<std::size_t>(csv::parse_int(next("dim").at(0)));
    m.params.epochs = static_cast<int>(csv::parse_int(next("epochs").at(0)));
    m.params.eta0 = csv::parse_double(next("eta0").at(0));
    m.params.lambda = csv::parse_double(next("lambda").at(0));
    m.params.seed = static_cast<std::uint64_t>(std::stoull(next("seed").at(0)));
    m.standardizer.mean = numbers(next("mean"), 0);
    m.standardizer.stddev = numbers(next("std"), 0);
    if (m.standardizer.mean.size() != m.standardizer.stddev.size() ||
        (!m.standardizer.mean.empty() && m.standardizer.mean.size() != m.dim)) {
        throw DataError("model: standardizer dimension mismatch");
    }
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        const auto tok = next("class");
        if (tok.empty() || tok[0] != to_string(kAllPatterns[c])) {
            throw DataError("model: class rows out of order");
        }
        auto v = numbers(tok, 1);
        if (v.size() != m.dim + 1) {
            throw DataError("model: weight row has wrong width");
        }
        m.bias[c] = v[0];
        m.weights[c].assign(v.begin() + 1, v.end());
    }
    return m;
}

} // namespace cellmap
