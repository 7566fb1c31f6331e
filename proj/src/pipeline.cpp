#include "cellmap/pipeline.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace cellmap {

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) {
                            error = std::current_exception();
                        }
                        failed = true;
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::size_t default_jobs()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

std::optional<TileKey> parse_tile_id(std::string_view tile_id)
{
    const auto c_pos = tile_id.rfind("_c");
    if (c_pos == std::string_view::npos) {
        return std::nullopt;
    }
    const auto r_pos = tile_id.rfind("_r", c_pos);
    if (r_pos == std::string_view::npos || r_pos == 0) {
        return std::nullopt;
    }
    auto to_int = [](std::string_view s) -> std::optional<int> {
        int v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || end != s.data() + s.size() || v < 0) {
            return std::nullopt;
        }
        return v;
    };
    const auto row = to_int(tile_id.substr(r_pos + 2, c_pos - r_pos - 2));
    const auto col = to_int(tile_id.substr(c_pos + 2));
    if (!row || !col) {
        return std::nullopt;
    }
    return TileKey{std::string(tile_id.substr(0, r_pos)), *row, *col};
}

std::vector<TileFeatures> featurize_slide(std::span<const NucleusRecord> records, std::span<const LabeledTile> tiles,
                                          double footprint)
{
    std::vector<TileFeatures> out;
    out.reserve(tiles.size());
    for (const auto& t : tiles) {
        const auto key = parse_tile_id(t.tile_id);
        if (!key) {
            throw DataError("tile id '" + t.tile_id + "' is not of the form <slide>_r<row>_c<col>");
        }
        const auto local = window_records(records, key->row, key->col, footprint);
        out.push_back({t.tile_id, t.slide_id, t.label, extract_features(local)});
    }
    return out;
}

std::string features_to_csv(std::span<const TileFeatures> rows)
{
    csv::Table t;
    t.header = {"tile_id", "slide_id", "label"};
    for (const auto& name : feature_names()) {
        t.header.push_back(name);
    }
    for (const auto& r : rows) {
        std::vector<std::string> row = {r.tile_id, r.slide_id, std::string(to_string(r.label))};
        for (const double v : r.features.values) {
            row.push_back(csv::format_double(v));
        }
        t.rows.push_back(std::move(row));
    }
    return csv::to_string(t);
}

std::vector<TileFeatures> features_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto ct = t.column("tile_id");
    const auto cs = t.column("slide_id");
    const auto cl = t.column("label");
    std::array<std::size_t, kNumFeatures> cf{};
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        cf[j] = t.column(feature_names()[j]);
    }
    std::vector<TileFeatures> out;
    for (const auto& row : t.rows) {
        TileFeatures f;
        f.tile_id = row[ct];
        f.slide_id = row[cs];
        const auto label = parse_growth_pattern(row[cl]);
        if (!label) {
            throw DataError(std::string(origin) + ": unknown label '" + row[cl] + "'");
        }
        f.label = *label;
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            f.features.values[j] = csv::parse_double(row[cf[j]]);
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::string scores_to_csv(std::span<const ScoredTile> rows)
{
    csv::Table t;
    t.header = {"tile_id"};
    for (const auto p : kAllPatterns) {
        t.header.emplace_back(to_string(p));
    }
    t.header.emplace_back("predicted");
    for (const auto& r : rows) {
        std::vector<std::string> row = {r.tile_id};
        for (const double s : r.scores) {
            row.push_back(csv::format_double(s));
        }
        row.emplace_back(to_string(r.predicted));
        t.rows.push_back(std::move(row));
    }
    return csv::to_string(t);
}

std::vector<ScoredTile> scores_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto ct = t.column("tile_id");
    const auto cp = t.column("predicted");
    std::array<std::size_t, kNumPatterns> cs{};
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        cs[c] = t.column(to_string(kAllPatterns[c]));
    }
    std::vector<ScoredTile> out;
    for (const auto& row : t.rows) {
        ScoredTile s;
        s.tile_id = row[ct];
        for (std::size_t c = 0; c < kNumPatterns; ++c) {
            s.scores[c] = csv::parse_double(row[cs[c]]);
        }
        const auto p = parse_growth_pattern(row[cp]);
        if (!p) {
            throw DataError(std::string(origin) + ": unknown predicted label '" + row[cp] + "'");
        }
        s.predicted = *p;
        out.push_back(std::move(s));
    }
    return out;
}

PlanTraining train_on_plan(const SplitPlan& plan, std::span<const TileFeatures> features, const SvmHyperparams& hp)
{
    std::unordered_map<std::string_view, const TileFeatures*> by_id;
    for (const auto& f : features) {
        by_id.emplace(f.tile_id, &f);
    }
    auto lookup = [&](std::size_t entry) -> const TileFeatures& {
        const auto& id = plan.entries[entry].tile.tile_id;
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw DataError("no features for tile '" + id + "'");
        }
        return *it->second;
    };

    PlanTraining out;
    for (const auto& round : eval_rounds(plan)) {
        std::vector<Sample> train;
        train.reserve(round.train.size());
        for (const auto i : round.train) {
            const auto& f = lookup(i).features.values;
            train.push_back({{f.begin(), f.end()}, plan.entries[i].tile.label});
        }
        auto model = fit_standardized(train, hp);
        for (const auto i : round.test) {
            const auto& f = lookup(i).features.values;
            const auto s = score_raw(model, f);
            out.scores.push_back({plan.entries[i].tile.tile_id, s, argmax(s)});
        }
        out.models.push_back(std::move(model));
    }
    return out;
}

std::vector<RoundReport> evaluate_plan(const SplitPlan& plan, std::span<const ScoredTile> scores)
{
    std::unordered_map<std::string_view, const ScoredTile*> by_id;
    for (const auto& s : scores) {
        by_id.emplace(s.tile_id, &s);
    }
    std::vector<RoundReport> out;
    for (const auto& round : eval_rounds(plan)) {
        std::vector<GrowthPattern> truth;
        std::vector<GrowthPattern> predicted;
        std::vector<ScoreVector> sv;
        for (const auto i : round.test) {
            const auto& id = plan.entries[i].tile.tile_id;
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw DataError("no score row for test tile '" + id + "'");
            }
            truth.push_back(plan.entries[i].tile.label);
            predicted.push_back(it->second->predicted);
            sv.push_back(it->second->scores);
        }
        out.push_back({round.name, evaluate(truth, predicted, sv)});
    }
    return out;
}

std::string round_reports_to_csv(std::span<const RoundReport> rows, std::string_view plan_label, SplitPolicy policy)
{
    csv::Table t;
    t.header = {"plan", "policy", "round", "n", "aucroc", "f1_macro", "accuracy"};
    for (const auto p : kAllPatterns) {
        t.header.push_back("f1_" + std::string(to_string(p)));
    }
    for (const auto& r : rows) {
        std::vector<std::string> row = {std::string(plan_label), std::string(to_string(policy)), r.round,
                                        std::to_string(r.report.n_samples),
                                        csv::format_double(r.report.aucroc_macro),
                                        csv::format_double(r.report.f1_macro), csv::format_double(r.report.accuracy)};
        for (const auto& c : r.report.per_class) {
            row.push_back(c.present ? csv::format_double(c.f1) : std::string());
        }
        t.rows.push_back(std::move(row));
    }
    return csv::to_string(t);
}

std::string confusion_to_csv(const ConfusionMatrix& cm)
{
    csv::Table t;
    t.header = {"truth"};
    for (const auto p : kAllPatterns) {
        t.header.emplace_back(to_string(p));
    }
    for (std::size_t r = 0; r < kNumPatterns; ++r) {
        std::vector<std::string> row = {std::string(to_string(kAllPatterns[r]))};
        for (const auto v : cm.counts[r]) {
            row.push_back(std::to_string(v));
        }
        t.rows.push_back(std::move(row));
    }
    return csv::to_string(t);
}

ProtocolResult run_protocols(std::span<const TileFeatures> features, const ProtocolOptions& opts)
{
    Manifest manifest;
    manifest.reserve(features.size());
    for (const auto& f : features) {
        manifest.push_back({f.tile_id, f.slide_id, f.label});
    }

    ProtocolResult out;
    const auto trials = static_cast<std::size_t>(std::max(opts.trials, 0));
    out.wsi_plans.resize(trials);
    out.wsi_trials.resize(trials);
    parallel_for(trials, opts.jobs, [&](std::size_t t) {
        out.wsi_plans[t] = make_wsi_split(manifest, opts.seed, static_cast<int>(t), opts.wsi);
        const auto trained = train_on_plan(out.wsi_plans[t], features, opts.svm);
        out.wsi_trials[t] = evaluate_plan(out.wsi_plans[t], trained.scores).front().report;
    });

    out.kfold_plan = make_tile_kfold(manifest, opts.k, opts.seed, 0);
    const auto trained = train_on_plan(out.kfold_plan, features, opts.svm);
    for (auto& r : evaluate_plan(out.kfold_plan, trained.scores)) {
        out.kfold_folds.push_back(std::move(r.report));
    }
    return out;
}

} // namespace cellmap
