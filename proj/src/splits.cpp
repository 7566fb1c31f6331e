#include "cellmap/splits.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"
#include "cellmap/rng.hpp"

#include <algorithm>
#include <bitset>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace cellmap {

namespace {

using PatternMask = std::bitset<kNumPatterns>;

void check_unique_ids(std::span<const LabeledTile> manifest)
{
    std::unordered_set<std::string_view> seen;
    seen.reserve(manifest.size());
    for (const auto& t : manifest) {
        if (!seen.insert(t.tile_id).second) {
            throw DataError("duplicate tile_id '" + t.tile_id + "' in manifest");
        }
    }
}

GrowthPattern label_or_throw(std::string_view s, std::string_view origin)
{
    const auto p = parse_growth_pattern(s);
    if (!p) {
        throw DataError(std::string(origin) + ": unknown growth pattern '" + std::string(s) + "'");
    }
    return *p;
}

std::string describe(const PatternMask& missing)
{
    std::string out;
    for (const auto p : kAllPatterns) {
        if (missing.test(index_of(p))) {
            if (!out.empty()) {
                out += ", ";
            }
            out += to_string(p);
        }
    }
    return out;
}

} // namespace

std::string manifest_to_csv(std::span<const LabeledTile> manifest)
{
    csv::Table t;
    t.header = {"tile_id", "slide_id", "label"};
    for (const auto& tile : manifest) {
        t.rows.push_back({tile.tile_id, tile.slide_id, std::string(to_string(tile.label))});
    }
    return csv::to_string(t);
}

Manifest manifest_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto ct = t.column("tile_id");
    const auto cs = t.column("slide_id");
    const auto cl = t.column("label");
    Manifest out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        out.push_back({row[ct], row[cs], label_or_throw(row[cl], origin)});
    }
    check_unique_ids(out);
    return out;
}

std::string_view to_string(SplitPolicy p)
{
    return p == SplitPolicy::WsiBased ? "wsi" : "tile";
}

std::string_view to_string(Part p)
{
    switch (p) {
    case Part::Train:
        return "train";
    case Part::Val:
        return "val";
    case Part::Test:
        return "test";
    }
    return "?";
}

SplitPlan make_wsi_split(std::span<const LabeledTile> manifest, std::uint64_t seed, int trial,
                         const WsiSplitOptions& opts)
{
    if (manifest.empty()) {
        throw DataError("wsi split: empty manifest");
    }
    if (!(opts.val_fraction >= 0.0 && opts.val_fraction < 1.0)) {
        throw ConfigError("wsi split: val_fraction must be in [0, 1)");
    }
    check_unique_ids(manifest);

    // Distinct slides in order of first appearance, with the patterns each holds.
    std::vector<std::string_view> slides;
    std::vector<PatternMask> slide_patterns;
    std::unordered_map<std::string_view, std::size_t> slide_index;
    PatternMask present;
    for (const auto& t : manifest) {
        auto [it, inserted] = slide_index.try_emplace(t.slide_id, slides.size());
        if (inserted) {
            slides.push_back(t.slide_id);
            slide_patterns.emplace_back();
        }
        slide_patterns[it->second].set(index_of(t.label));
        present.set(index_of(t.label));
    }
    if (opts.n_test_slides == 0 || opts.n_test_slides >= slides.size()) {
        throw InfeasibleSplit("wsi split: need 0 < test slides (" + std::to_string(opts.n_test_slides) +
                              ") < distinct slides (" + std::to_string(slides.size()) + ")");
    }
    if (!present.all()) {
        throw InfeasibleSplit("wsi split: manifest lacks patterns: " + describe(~present));
    }

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
    std::vector<std::size_t> order(slides.size());
    PatternMask best;
    bool found = false;
    for (std::size_t draw = 0; draw < opts.resample_budget && !found; ++draw) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Partial Fisher-Yates: the first n_test positions are a uniform sample.
        PatternMask covered;
        for (std::size_t i = 0; i < opts.n_test_slides; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
            std::swap(order[i], order[j]);
            covered |= slide_patterns[order[i]];
        }
        if (covered.count() > best.count()) {
            best = covered;
        }
        found = covered.all();
    }
    if (!found) {
        throw InfeasibleSplit("wsi split: no " + std::to_string(opts.n_test_slides) + "-slide test set covering all patterns after " +
                              std::to_string(opts.resample_budget) + " draws; best draw missed: " + describe(~best));
    }

    std::vector<bool> is_test_slide(slides.size(), false);
    for (std::size_t i = 0; i < opts.n_test_slides; ++i) {
        is_test_slide[order[i]] = true;
    }

    SplitPlan plan;
    plan.policy = SplitPolicy::WsiBased;
    plan.seed = seed;
    plan.trial = trial;
    plan.entries.reserve(manifest.size());
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const bool test = is_test_slide[slide_index.at(manifest[i].slide_id)];
        plan.entries.push_back({manifest[i], test ? Part::Test : Part::Train, -1});
        if (!test) {
            pool.push_back(i);
        }
    }
    shuffle(std::span(pool), rng);
    const auto n_val = static_cast<std::size_t>(std::round(opts.val_fraction * static_cast<double>(pool.size())));
    for (std::size_t i = 0; i < n_val; ++i) {
        plan.entries[pool[i]].part = Part::Val;
    }
    return plan;
}

SplitPlan make_tile_kfold(std::span<const LabeledTile> manifest, int k, std::uint64_t seed, int trial)
{
    if (k < 2) {
        throw ConfigError("k-fold: k must be >= 2");
    }
    if (manifest.size() < static_cast<std::size_t>(k)) {
        throw InfeasibleSplit("k-fold: k (" + std::to_string(k) + ") exceeds manifest size (" +
                              std::to_string(manifest.size()) + ")");
    }
    check_unique_ids(manifest);

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
    std::vector<std::size_t> order(manifest.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span(order), rng);

    SplitPlan plan;
    plan.policy = SplitPolicy::TileBasedKFold;
    plan.seed = seed;
    plan.trial = trial;
    plan.folds = k;
    plan.entries.resize(manifest.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const auto i = order[pos];
        plan.entries[i] = {manifest[i], Part::Test, static_cast<int>(pos % static_cast<std::size_t>(k))};
    }
    return plan;
}

std::vector<EvalRound> eval_rounds(const SplitPlan& plan)
{
    std::vector<EvalRound> rounds;
    if (plan.policy == SplitPolicy::WsiBased) {
        EvalRound r;
        r.name = "test";
        for (std::size_t i = 0; i < plan.entries.size(); ++i) {
            switch (plan.entries[i].part) {
            case Part::Train:
                r.train.push_back(i);
                break;
            case Part::Val:
                r.val.push_back(i);
                break;
            case Part::Test:
                r.test.push_back(i);
                break;
            }
        }
        rounds.push_back(std::move(r));
        return rounds;
    }
    for (int f = 0; f < plan.folds; ++f) {
        EvalRound r;
        r.name = "fold" + std::to_string(f);
        for (std::size_t i = 0; i < plan.entries.size(); ++i) {
            (plan.entries[i].fold == f ? r.test : r.train).push_back(i);
        }
        rounds.push_back(std::move(r));
    }
    return rounds;
}

std::size_t LeakageReport::total_leaked() const
{
    std::size_t n = 0;
    for (const auto& r : rows) {
        n += r.leaked_tiles;
    }
    return n;
}

LeakageReport audit_leakage(const SplitPlan& plan, std::span<const LabeledTile> manifest)
{
    if (plan.entries.size() != manifest.size()) {
        throw DataError("audit: plan has " + std::to_string(plan.entries.size()) + " entries, manifest " +
                        std::to_string(manifest.size()));
    }
    std::unordered_set<std::string_view> planned;
    for (const auto& e : plan.entries) {
        planned.insert(e.tile.tile_id);
    }
    for (const auto& t : manifest) {
        if (!planned.contains(t.tile_id)) {
            throw DataError("audit: tile '" + t.tile_id + "' missing from plan");
        }
    }

    LeakageReport report;
    report.policy = plan.policy;
    report.trial = plan.trial;
    for (const auto& round : eval_rounds(plan)) {
        std::unordered_set<std::string_view> seen_in_training;
        for (const auto i : round.train) {
            seen_in_training.insert(plan.entries[i].tile.slide_id);
        }
        for (const auto i : round.val) {
            seen_in_training.insert(plan.entries[i].tile.slide_id);
        }
        LeakageRow row;
        row.round = round.name;
        row.test_tiles = round.test.size();
        std::set<std::string_view> shared;
        for (const auto i : round.test) {
            const auto& slide = plan.entries[i].tile.slide_id;
            if (seen_in_training.contains(slide)) {
                ++row.leaked_tiles;
                shared.insert(slide);
            }
        }
        row.shared_slides = shared.size();
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string leakage_to_csv(std::span<const LeakageReport> reports)
{
    csv::Table t;
    t.header = {"policy", "trial", "round", "test_tiles", "leaked_tiles", "shared_slides"};
    for (const auto& rep : reports) {
        for (const auto& row : rep.rows) {
            t.rows.push_back({std::string(to_string(rep.policy)), std::to_string(rep.trial), row.round,
                              std::to_string(row.test_tiles), std::to_string(row.leaked_tiles),
                              std::to_string(row.shared_slides)});
        }
    }
    return csv::to_string(t);
}

std::string plan_to_csv(const SplitPlan& plan)
{
    csv::Table t;
    t.header = {"tile_id", "slide_id", "label", "assignment", "trial", "seed"};
    t.rows.reserve(plan.entries.size());
    const auto trial = std::to_string(plan.trial);
    const auto seed = std::to_string(plan.seed);
    for (const auto& e : plan.entries) {
        const std::string assignment =
            plan.policy == SplitPolicy::WsiBased ? std::string(to_string(e.part)) : std::to_string(e.fold);
        t.rows.push_back({e.tile.tile_id, e.tile.slide_id, std::string(to_string(e.tile.label)), assignment, trial, seed});
    }
    return csv::to_string(t);
}

SplitPlan plan_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto ct = t.column("tile_id");
    const auto cs = t.column("slide_id");
    const auto cl = t.column("label");
    const auto ca = t.column("assignment");
    const auto ctr = t.column("trial");
    const auto cseed = t.column("seed");
    if (t.rows.empty()) {
        throw DataError(std::string(origin) + ": empty plan");
    }

    SplitPlan plan;
    const auto& first = t.rows.front()[ca];
    const bool is_fold = !first.empty() && std::all_of(first.begin(), first.end(), [](char c) { return c >= '0' && c <= '9'; });
    plan.policy = is_fold ? SplitPolicy::TileBasedKFold : SplitPolicy::WsiBased;
    plan.trial = static_cast<int>(csv::parse_int(t.rows.front()[ctr]));
    {
        const auto& s = t.rows.front()[cseed];
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), plan.seed);
        if (ec != std::errc{} || end != s.data() + s.size()) {
            throw DataError(std::string(origin) + ": bad seed '" + s + "'");
        }
    }
    for (const auto& row : t.rows) {
        PlanEntry e;
        e.tile = {row[ct], row[cs], label_or_throw(row[cl], origin)};
        const auto& a = row[ca];
        if (plan.policy == SplitPolicy::TileBasedKFold) {
            e.fold = static_cast<int>(csv::parse_int(a));
            if (e.fold < 0) {
                throw DataError(std::string(origin) + ": negative fold index");
            }
            e.part = Part::Test;
            plan.folds = std::max(plan.folds, e.fold + 1);
        } else if (a == "train") {
            e.part = Part::Train;
        } else if (a == "val") {
            e.part = Part::Val;
        } else if (a == "test") {
            e.part = Part::Test;
        } else {
            throw DataError(std::string(origin) + ": bad assignment '" + a + "'");
        }
        if (csv::parse_int(row[ctr]) != plan.trial || row[cseed] != t.rows.front()[cseed]) {
            throw DataError(std::string(origin) + ": mixed trials or seeds in one plan file");
        }
        plan.entries.push_back(std::move(e));
    }
    return plan;
}

} // namespace cellmap
