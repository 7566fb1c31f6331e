// Acceptance suite: one PASS/FAIL line per criterion, with wall time.
// Usage: acceptance [scratch-dir]

#include "cli.hpp"
#include "oracles.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"
#include "cellmap/features.hpp"
#include "cellmap/metrics.hpp"
#include "cellmap/raster.hpp"
#include "cellmap/rng.hpp"
#include "cellmap/splits.hpp"
#include "cellmap/svm.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace cellmap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects failure messages; the first few end up in the detail column.
class Checker {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            ++failures_;
            if (messages_.size() < 3) {
                messages_.push_back(what);
            }
        }
    }

    Outcome outcome(std::string summary) const
    {
        if (failures_ == 0) {
            return {true, std::move(summary)};
        }
        std::string d = fmt::format("{} failure(s):", failures_);
        for (const auto& m : messages_) {
            d += " [" + m + "]";
        }
        return {false, d};
    }

private:
    std::size_t failures_ = 0;
    std::vector<std::string> messages_;
};

std::set<std::pair<long, long>> set_pixels(const BinaryPlane& p)
{
    std::set<std::pair<long, long>> out;
    for (int y = 0; y < p.height(); ++y) {
        for (int x = 0; x < p.width(); ++x) {
            if (p.at(x, y) != 0) {
                out.emplace(x, y);
            }
        }
    }
    return out;
}

// ---- criteria ----

Outcome disk_geometry()
{
    Checker c;
    BinaryPlane interior(64, 64);
    stamp_disk(interior, {10, 10}, 4);
    c.expect(interior.count_set() == 49, fmt::format("interior disk has {} px", interior.count_set()));
    c.expect(oracle::disk_pixels(10, 10, 4, 64, 64).size() == 49, "oracle interior != 49");
    BinaryPlane corner(64, 64);
    stamp_disk(corner, {0, 0}, 4);
    c.expect(corner.count_set() == 17, fmt::format("corner disk has {} px", corner.count_set()));
    c.expect(oracle::disk_pixels(0, 0, 4, 64, 64).size() == 17, "oracle corner != 17");

    Rng rng(20240);
    for (int i = 0; i < 10000; ++i) {
        const int w = 1 + static_cast<int>(rng.below(64));
        const int h = 1 + static_cast<int>(rng.below(64));
        const double cx = rng.uniform(-6, w + 6);
        const double cy = rng.uniform(-6, h + 6);
        BinaryPlane p(w, h);
        stamp_disk(p, {cx, cy}, 4);
        c.expect(set_pixels(p) == oracle::disk_pixels(cx, cy, 4, w, h),
                 fmt::format("stamp {} at ({}, {}) on {}x{}", i, cx, cy, w, h));
    }
    return c.outcome("49/17 px; 10000 random stamps equal the lattice oracle");
}

Outcome raster_round_trip()
{
    Checker c;
    Rng rng(31337);
    const RasterConfig cfg;
    for (int i = 0; i < 1000; ++i) {
        TileRecord t{"s", 0, 0, CellMap(cfg.tile_size, cfg.tile_size), {}};
        for (auto& plane : t.pixels.planes) {
            const auto disks = rng.below(40);
            for (std::uint64_t d = 0; d < disks; ++d) {
                stamp_disk(plane, {rng.uniform(-4, 260), rng.uniform(-4, 260)}, 4);
            }
        }
        c.expect(decode_png(encode_tile_png(t)) == t.pixels, fmt::format("tile {} differs after PNG", i));
    }
    for (int i = 0; i < 20; ++i) {
        const int w = 1 + static_cast<int>(rng.below(900));
        const int h = 1 + static_cast<int>(rng.below(900));
        CellMap map(w, h);
        for (auto& plane : map.planes) {
            for (int d = 0; d < 300; ++d) {
                stamp_disk(plane, {rng.uniform(0, w), rng.uniform(0, h)}, 4);
            }
        }
        c.expect(stitch_tiles(tile_map(map, cfg, "s"), w, h, cfg.tile_size) == map,
                 fmt::format("stitch of {}x{} map differs", w, h));
    }
    return c.outcome("1000 tiles bit-identical through PNG; 20 maps stitch back exactly");
}

Manifest hygiene_manifest(std::uint64_t seed, bool drop_class)
{
    Rng rng(derive_seed(seed, {0xA11CE}));
    Manifest m;
    for (int s = 0; s < 18; ++s) {
        const auto label = kAllPatterns[static_cast<std::size_t>(s / 3)];
        if (drop_class && label == GrowthPattern::Papillary) {
            continue;
        }
        const auto tiles = 5 + rng.below(60);
        for (std::uint64_t t = 0; t < tiles; ++t) {
            const auto slide = "s" + std::to_string(s);
            m.push_back({make_tile_id(slide, 0, static_cast<int>(t)), slide, label});
        }
    }
    return m;
}

Outcome split_hygiene()
{
    Checker c;
    std::size_t feasible = 0;
    std::size_t infeasible = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const bool drop = seed % 10 == 9;
        const auto m = hygiene_manifest(seed, drop);
        try {
            const auto plan = make_wsi_split(m, seed);
            ++feasible;
            c.expect(!drop, fmt::format("seed {}: plan without a covering test set", seed));
            std::set<std::string> test_slides;
            std::set<std::string> other_slides;
            std::set<GrowthPattern> covered;
            for (const auto& e : plan.entries) {
                if (e.part == Part::Test) {
                    test_slides.insert(e.tile.slide_id);
                    covered.insert(e.tile.label);
                } else {
                    other_slides.insert(e.tile.slide_id);
                }
            }
            for (const auto& s : test_slides) {
                c.expect(other_slides.count(s) == 0, fmt::format("seed {}: slide {} on both sides", seed, s));
            }
            c.expect(test_slides.size() == 6, fmt::format("seed {}: {} test slides", seed, test_slides.size()));
            c.expect(covered.size() == kNumPatterns, fmt::format("seed {}: test covers {} patterns", seed, covered.size()));
            c.expect(plan.entries.size() == m.size(), fmt::format("seed {}: plan size", seed));
        } catch (const InfeasibleSplit&) {
            ++infeasible;
            c.expect(drop, fmt::format("seed {}: unexpected infeasibility", seed));
        }

        const auto kf = make_tile_kfold(m, 5, seed);
        std::map<int, std::size_t> sizes;
        std::set<std::string> ids;
        for (std::size_t i = 0; i < kf.entries.size(); ++i) {
            const auto& e = kf.entries[i];
            c.expect(e.tile == m[i], fmt::format("seed {}: k-fold entry {} reordered", seed, i));
            c.expect(e.fold >= 0 && e.fold < 5, fmt::format("seed {}: fold {}", seed, e.fold));
            ++sizes[e.fold];
            ids.insert(e.tile.tile_id);
        }
        c.expect(ids.size() == m.size(), fmt::format("seed {}: k-fold is not a partition", seed));
        std::size_t lo = m.size();
        std::size_t hi = 0;
        for (const auto& [f, n] : sizes) {
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        c.expect(sizes.size() == 5 && hi - lo <= 1, fmt::format("seed {}: fold sizes {}..{}", seed, lo, hi));
    }
    return c.outcome(fmt::format("1000 seeds: {} disjoint covering plans, {} infeasibility errors; k-fold partitions exact",
                                 feasible, infeasible));
}

Outcome feature_oracle()
{
    Checker c;
    Rng rng(4242);
    const std::array classes = {CellClass::Neoplastic, CellClass::NonNeoplasticEpithelial, CellClass::Connective,
                                CellClass::Inflammatory};
    for (int i = 0; i < 1000; ++i) {
        const auto n = rng.below(201);
        std::vector<MapPoint> pts;
        std::vector<std::pair<double, double>> raw;
        std::vector<NucleusRecord> records;
        for (std::uint64_t j = 0; j < n; ++j) {
            // 1/64 grid keeps translated copies exact.
            const double x = static_cast<double>(rng.below(1024 * 64)) / 64.0;
            const double y = static_cast<double>(rng.below(1024 * 64)) / 64.0;
            pts.push_back({x, y});
            raw.emplace_back(x, y);
            records.push_back({x, y, classes[rng.below(4)], {}});
        }
        const auto got = pairwise_extremes(pts);
        const auto want = oracle::pair_extremes(raw);
        c.expect(got.max == want.max && got.min == want.min, fmt::format("set {}: extremes differ", i));

        const auto base = extract_features(records);
        auto permuted = records;
        shuffle(std::span<NucleusRecord>(permuted), rng);
        c.expect(extract_features(permuted) == base, fmt::format("set {}: permutation changed features", i));
        auto shifted = records;
        const double dx = static_cast<double>(rng.below(4096));
        const double dy = static_cast<double>(rng.below(4096));
        for (auto& r : shifted) {
            r.x += dx;
            r.y += dy;
        }
        c.expect(extract_features(shifted) == base, fmt::format("set {}: translation changed features", i));
    }
    return c.outcome("1000 point sets equal the exhaustive oracle; translation and permutation invariant");
}

Outcome metrics_oracle()
{
    Checker c;
    Rng rng(777);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> pos(1 + rng.below(100));
        std::vector<double> neg(1 + rng.below(100));
        const bool ties = i % 3 == 0;
        for (auto* v : {&pos, &neg}) {
            for (auto& s : *v) {
                s = ties ? std::floor(rng.uniform(0, 8)) : rng.normal();
            }
        }
        const double diff = std::fabs(binary_auc(pos, neg) - oracle::trapezoid_auc(pos, neg));
        worst = std::max(worst, diff);
        c.expect(diff <= 1e-12, fmt::format("set {}: |diff| = {}", i, diff));
    }
    const double auc = binary_auc(std::vector{0.8, 0.6}, std::vector{0.7, 0.1});
    c.expect(auc == 0.75, fmt::format("AUC fixture gave {}", auc));
    using G = GrowthPattern;
    const std::vector truth = {G::Lepidic, G::Lepidic, G::Acinar, G::Acinar};
    const std::vector pred = {G::Lepidic, G::Acinar, G::Lepidic, G::Acinar};
    const double f1 = f1_macro(truth, pred);
    c.expect(f1 == 0.5, fmt::format("macro-F1 fixture gave {}", f1));
    return c.outcome(fmt::format("1000 score sets, max |pair - trapezoid| = {:.1e}; AUC 3/4 and F1 0.5 fixtures exact",
                                 worst));
}

Outcome svm_criteria()
{
    Checker c;
    Rng rng(99);
    std::vector<Sample> toy;
    std::vector<std::pair<double, double>> a;
    std::vector<std::pair<double, double>> b;
    for (int i = 0; i < 20; ++i) {
        toy.push_back({{-2.0 + rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)}, GrowthPattern::Lepidic});
        a.emplace_back(toy.back().x[0], toy.back().x[1]);
        toy.push_back({{2.0 + rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)}, GrowthPattern::Acinar});
        b.emplace_back(toy.back().x[0], toy.back().x[1]);
    }
    c.expect(oracle::linearly_separable_2d(a, b), "toy set not separable");
    const auto model = fit(toy, {100, 0.1, 1e-4, 1});
    std::size_t correct = 0;
    for (const auto& s : toy) {
        correct += predict(model, s.x) == s.y ? 1 : 0;
    }
    c.expect(correct == toy.size(), fmt::format("toy accuracy {}/{}", correct, toy.size()));

    std::vector<Sample> batch;
    for (int i = 0; i < 40; ++i) {
        Sample s;
        s.y = kAllPatterns[rng.below(kNumPatterns)];
        for (int j = 0; j < 5; ++j) {
            s.x.push_back(rng.normal());
        }
        batch.push_back(s);
    }
    double worst = 0.0;
    int checked = 0;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> w(5);
        for (auto& v : w) {
            v = rng.normal(0, 0.5);
        }
        const double bias = rng.normal(0, 0.5);
        const auto positive = kAllPatterns[rng.below(kNumPatterns)];
        bool on_hinge = false;
        for (const auto& s : batch) {
            double m = bias;
            for (std::size_t j = 0; j < w.size(); ++j) {
                m += w[j] * s.x[j];
            }
            m *= s.y == positive ? 1.0 : -1.0;
            on_hinge = on_hinge || std::fabs(1.0 - m) < 1e-4;
        }
        if (on_hinge) {
            continue;
        }
        ++checked;
        const auto g = binary_subgradient(w, bias, batch, positive, 1e-2);
        constexpr double h = 1e-6;
        for (std::size_t j = 0; j <= w.size(); ++j) {
            auto wp = w;
            auto wm = w;
            double bp = bias;
            double bm = bias;
            if (j < w.size()) {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double fd = (binary_objective(wp, bp, batch, positive, 1e-2) -
                               binary_objective(wm, bm, batch, positive, 1e-2)) /
                              (2 * h);
            const double an = j < w.size() ? g.w[j] : g.b;
            worst = std::max(worst, std::fabs(fd - an));
        }
    }
    c.expect(checked > 0, "no off-hinge draws");
    c.expect(worst <= 1e-5, fmt::format("finite-difference gap {}", worst));

    const SvmHyperparams hp{60, 0.1, 1e-3, 5};
    c.expect(fit_standardized(batch, hp) == fit_standardized(batch, hp), "refit differs");
    return c.outcome(fmt::format("toy accuracy 1.0; FD gap {:.1e} over {} draws; refits bit-identical", worst, checked));
}

// ---- CLI-driven criteria ----

struct CliRun {
    int code = 0;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args)
{
    std::vector<const char*> argv = {"cellmap"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cellmap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, err.str()};
}

/// synth -> report with defaults; returns an error string or empty.
std::string full_pipeline(const fs::path& root)
{
    fs::remove_all(root);
    const std::string r = root.string();
    std::vector<std::vector<std::string>> steps = {
        {"synth", "--classes", "6", "--per-class", "3", "--seed", "7"},
        {"ingest"},
        {"rasterize"},
        {"tile"},
        {"featurize"},
        {"split", "--policy", "wsi", "--trials", "5", "--test-slides", "6"},
        {"split", "--policy", "tile", "--k", "5"},
    };
    std::vector<std::string> plans;
    for (int t = 0; t < 5; ++t) {
        plans.push_back((root / "splits" / fmt::format("wsi_t{}.csv", t)).string());
    }
    plans.push_back((root / "splits" / "tile_t0.csv").string());
    for (const auto& p : plans) {
        steps.push_back({"train-svm", "--plan", p});
        steps.push_back({"evaluate", "--plan", p});
    }
    steps.push_back({"audit-splits"});
    steps.push_back({"report"});
    for (auto step : steps) {
        step.insert(step.begin(), {"--root", r});
        const auto res = cli(step);
        if (res.code != 0) {
            return fmt::format("'{}' exited {}: {}", step[2], res.code, res.err);
        }
    }
    return {};
}

double column_value(const csv::Table& t, std::size_t row, const char* col)
{
    return csv::parse_double(t.rows.at(row).at(t.column(col)));
}

Outcome end_to_end(const fs::path& root)
{
    Checker c;
    if (const auto e = full_pipeline(root); !e.empty()) {
        return {false, e};
    }
    const auto kfold = csv::read(root / "eval" / "tile_t0.csv");
    c.expect(kfold.rows.size() == 5, "k-fold eval does not have 5 folds");
    double wsi_sum = 0.0;
    int wins = 0;
    std::string pairs;
    for (std::size_t t = 0; t < 5; ++t) {
        const auto wsi = csv::read(root / "eval" / fmt::format("wsi_t{}.csv", t));
        const double w = column_value(wsi, 0, "accuracy");
        const double k = column_value(kfold, t, "accuracy");
        wsi_sum += w;
        wins += k > w ? 1 : 0;
        pairs += fmt::format(" {:.2f}/{:.2f}", k, w);
    }
    const double wsi_mean = wsi_sum / 5.0;
    c.expect(wsi_mean >= 0.60, fmt::format("mean WSI accuracy {:.3f} < 0.60", wsi_mean));
    c.expect(wins >= 4, fmt::format("k-fold beat WSI in {}/5 pairs", wins));

    const auto leak = csv::read(root / "audit" / "leakage.csv");
    for (std::size_t i = 0; i < leak.rows.size(); ++i) {
        if (leak.rows[i][leak.column("policy")] == "wsi") {
            c.expect(leak.rows[i][leak.column("leaked_tiles")] == "0", "WSI plan leaks");
        }
    }
    return c.outcome(fmt::format("mean WSI accuracy {:.3f}; k-fold > WSI in {}/5 (kfold/wsi:{})", wsi_mean, wins,
                                 pairs));
}

Outcome determinism(const fs::path& first, const fs::path& second)
{
    Checker c;
    if (const auto e = full_pipeline(second); !e.empty()) {
        return {false, e};
    }
    for (const auto* name : {"report.csv", "report.txt", "features.csv"}) {
        c.expect(csv::read_file(first / name) == csv::read_file(second / name), fmt::format("{} differs", name));
    }
    c.expect(csv::read_file(first / "tiles" / "synth_solid_2_r3_c3.png") ==
                 csv::read_file(second / "tiles" / "synth_solid_2_r3_c3.png"),
             "tile PNG differs");
    return c.outcome("two synth -> report runs give byte-identical report.csv, report.txt and features.csv");
}

} // namespace

int main(int argc, char** argv)
{
    ::unsetenv("CELLMAP_SEED");
    const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "cellmap_acceptance";
    fs::create_directories(scratch);

    struct Criterion {
        const char* name;
        double budget_s; // 0 = no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"disk geometry", 5, disk_geometry},
        {"raster round-trip", 30, raster_round_trip},
        {"split hygiene", 10, split_hygiene},
        {"feature oracle", 0, feature_oracle},
        {"metrics oracle", 0, metrics_oracle},
        {"svm", 0, svm_criteria},
        {"end-to-end synthetic", 300, [&] { return end_to_end(scratch / "run_a"); }},
        {"full-pipeline determinism", 0, [&] { return determinism(scratch / "run_a", scratch / "run_b"); }},
    };

    int failed = 0;
    for (const auto& crit : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = crit.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (crit.budget_s > 0 && secs >= crit.budget_s) {
            o.pass = false;
            o.detail += fmt::format(" (over the {:.0f} s budget)", crit.budget_s);
        }
        failed += o.pass ? 0 : 1;
        std::cout << fmt::format("{} {:<26} {:>7.2f} s  {}\n", o.pass ? "PASS" : "FAIL", crit.name, secs, o.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                             criteria.size());
    return failed == 0 ? 0 : 1;
}
