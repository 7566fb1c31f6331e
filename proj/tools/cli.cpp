#include "cli.hpp"

#include "config.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"
#include "cellmap/metrics.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cellmap::cli {

namespace {

namespace fs = std::filesystem;

// Run-directory layout under the configured root.
struct Layout {
    fs::path root;

    fs::path cohort() const { return root / "cohort"; }
    fs::path slides_csv() const { return cohort() / "slides.csv"; }
    fs::path manifest_csv() const { return cohort() / "manifest.csv"; }
    fs::path nuclei(const std::string& slide) const { return root / "nuclei" / (slide + ".csv"); }
    fs::path map_png(const std::string& slide) const { return root / "maps" / (slide + ".png"); }
    fs::path tiles_dir() const { return root / "tiles"; }
    fs::path features_csv() const { return root / "features.csv"; }
    fs::path splits_dir() const { return root / "splits"; }
    fs::path models_dir() const { return root / "models"; }
    fs::path scores_csv(const std::string& stem) const { return root / "scores" / (stem + ".csv"); }
    fs::path eval_dir() const { return root / "eval"; }
    fs::path export_dir(const std::string& stem) const { return root / "export" / stem; }
    fs::path leakage_csv() const { return root / "audit" / "leakage.csv"; }
};

struct SlideList {
    fs::path base;
    std::vector<SlideEntry> entries;
};

SlideList load_slides(const fs::path& path)
{
    return {path.parent_path(), slides_from_csv(csv::read_file(path), path.string())};
}

Manifest load_manifest(const fs::path& path)
{
    return manifest_from_csv(csv::read_file(path), path.string());
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    csv::write_file(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

std::span<const std::uint8_t> as_bytes(const std::string& s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

void check_magnifications(const RasterConfig& raster, const SlideMeta& meta)
{
    if (raster.detection_mag != meta.detection_mag || raster.map_mag != meta.map_mag) {
        throw ConfigError(fmt::format("slide '{}' is {}x/{}x but raster config is {}x/{}x", meta.slide_id,
                                      meta.detection_mag, meta.map_mag, raster.detection_mag, raster.map_mag));
    }
}

std::string plan_stem(const fs::path& plan_path)
{
    return plan_path.stem().string();
}

SplitPlan load_plan(const fs::path& path)
{
    return plan_from_csv(csv::read_file(path), path.string());
}

std::string one_line(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

// ---- subcommands ----

void cmd_synth(const PipelineConfig& cfg, int classes, std::ostream& out)
{
    if (classes != static_cast<int>(kNumPatterns)) {
        throw ConfigError(fmt::format("synth: --classes must be {}, got {}", kNumPatterns, classes));
    }
    const Layout lay{cfg.root};
    const auto cohort = generate_cohort(cfg.synth);
    const auto counts = write_cohort(cohort, lay.cohort());
    csv::write_file(lay.root / "config.ini", render_config(cfg));
    out << fmt::format("{} slides, {} tiles -> {}\n", cohort.slides.size(), cohort.manifest.size(),
                       lay.cohort().string());
    for (std::size_t c = 0; c < kNumPatterns; ++c) {
        out << fmt::format("  {:<15} {}\n", to_string(kAllPatterns[c]), counts[c]);
    }
}

void cmd_ingest(const PipelineConfig& cfg, std::size_t jobs, const fs::path& slides_path, std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto list = load_slides(slides_path);
    std::vector<ParsedNuclei> parsed(list.entries.size());
    parallel_for(list.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = list.entries[i];
        const auto path = list.base / e.json_path;
        try {
            parsed[i] = parse_nuclei(csv::read_file(path), cfg.codes, cfg.policy);
        } catch (const DataError& ex) {
            throw DataError(path.string() + ": " + ex.what());
        }
        if (parsed[i].magnification && *parsed[i].magnification != e.meta.detection_mag) {
            throw DataError(fmt::format("{}: mag {} disagrees with slides.csv detection_mag {}", path.string(),
                                        *parsed[i].magnification, e.meta.detection_mag));
        }
        csv::write_file(lay.nuclei(e.meta.slide_id), nuclei_to_csv(parsed[i].records));
        parsed[i].records.clear();
    });

    csv::Table summary;
    summary.header = {"slide_id", "total", "accepted", "rejected"};
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        const auto& p = parsed[i];
        const auto ok = p.total_entries - p.rejected;
        summary.rows.push_back({list.entries[i].meta.slide_id, std::to_string(p.total_entries), std::to_string(ok),
                                std::to_string(p.rejected)});
        accepted += ok;
        rejected += p.rejected;
    }
    csv::write_file(lay.root / "nuclei" / "summary.csv", csv::to_string(summary));
    out << fmt::format("{} slides, {} nuclei accepted, {} rejected ({} policy)\n", parsed.size(), accepted,
                       rejected, to_string(cfg.policy));
}

void cmd_rasterize(const PipelineConfig& cfg, std::size_t jobs, const fs::path& slides_path, std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto list = load_slides(slides_path);
    parallel_for(list.entries.size(), jobs, [&](std::size_t i) {
        const auto& meta = list.entries[i].meta;
        check_magnifications(cfg.raster, meta);
        const auto path = lay.nuclei(meta.slide_id);
        const auto records = nuclei_from_csv(csv::read_file(path), path.string());
        const auto map = build_cell_map(filter_classes(records, kRenderedClasses), meta, cfg.raster);
        write_bytes(lay.map_png(meta.slide_id), encode_png(map));
    });
    out << fmt::format("{} cell maps -> {}\n", list.entries.size(), (lay.root / "maps").string());
}

void cmd_tile(const PipelineConfig& cfg, std::size_t jobs, const fs::path& slides_path, std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto list = load_slides(slides_path);
    std::vector<std::vector<std::vector<std::string>>> rows(list.entries.size());
    parallel_for(list.entries.size(), jobs, [&](std::size_t i) {
        const auto& id = list.entries[i].meta.slide_id;
        const auto map = decode_png(as_bytes(csv::read_file(lay.map_png(id))));
        for (const auto& tile : tile_map(map, cfg.raster, id)) {
            const auto tid = tile.tile_id();
            write_bytes(lay.tiles_dir() / (tid + ".png"), encode_tile_png(tile));
            rows[i].push_back({tid, id, std::to_string(tile.grid_row), std::to_string(tile.grid_col), tid + ".png"});
        }
    });
    csv::Table index;
    index.header = {"tile_id", "slide_id", "row", "col", "png"};
    for (auto& r : rows) {
        std::move(r.begin(), r.end(), std::back_inserter(index.rows));
    }
    csv::write_file(lay.tiles_dir() / "tiles.csv", csv::to_string(index));
    out << fmt::format("{} tiles -> {}\n", index.rows.size(), lay.tiles_dir().string());
}

void cmd_featurize(const PipelineConfig& cfg, std::size_t jobs, const fs::path& slides_path,
                   const fs::path& manifest_path, std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto list = load_slides(slides_path);
    const auto manifest = load_manifest(manifest_path);

    std::unordered_map<std::string, std::size_t> slide_index;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        slide_index.emplace(list.entries[i].meta.slide_id, i);
    }
    std::vector<std::vector<LabeledTile>> per_slide(list.entries.size());
    for (const auto& t : manifest) {
        const auto it = slide_index.find(t.slide_id);
        if (it == slide_index.end()) {
            throw DataError(fmt::format("{}: slide '{}' is not listed in {}", manifest_path.string(), t.slide_id,
                                        slides_path.string()));
        }
        per_slide[it->second].push_back(t);
    }

    std::vector<std::vector<TileFeatures>> computed(list.entries.size());
    parallel_for(list.entries.size(), jobs, [&](std::size_t i) {
        if (per_slide[i].empty()) {
            return;
        }
        const auto& meta = list.entries[i].meta;
        check_magnifications(cfg.raster, meta);
        const auto path = lay.nuclei(meta.slide_id);
        const auto records = nuclei_from_csv(csv::read_file(path), path.string());
        computed[i] = featurize_slide(records, per_slide[i], cfg.raster.footprint());
    });

    std::unordered_map<std::string, const TileFeatures*> by_id;
    for (const auto& slide : computed) {
        for (const auto& f : slide) {
            by_id.emplace(f.tile_id, &f);
        }
    }
    std::vector<TileFeatures> rows;
    rows.reserve(manifest.size());
    for (const auto& t : manifest) {
        rows.push_back(*by_id.at(t.tile_id));
    }
    csv::write_file(lay.features_csv(), features_to_csv(rows));
    out << fmt::format("{} feature rows -> {}\n", rows.size(), lay.features_csv().string());
}

void cmd_split(const PipelineConfig& cfg, SplitPolicy policy, int trials, const fs::path& manifest_path,
               std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto manifest = load_manifest(manifest_path);
    const auto prefix = std::string(to_string(policy)) + "_t";

    std::vector<SplitPlan> plans;
    for (int t = 0; t < trials; ++t) {
        plans.push_back(policy == SplitPolicy::WsiBased ? make_wsi_split(manifest, cfg.split_seed, t, cfg.wsi)
                                                        : make_tile_kfold(manifest, cfg.k, cfg.split_seed, t));
    }

    // Drop plans of this policy left over from an earlier run with more trials.
    if (fs::exists(lay.splits_dir())) {
        for (const auto& e : fs::directory_iterator(lay.splits_dir())) {
            const auto name = e.path().filename().string();
            if (name.starts_with(prefix) && e.path().extension() == ".csv") {
                fs::remove(e.path());
            }
        }
    }
    for (const auto& plan : plans) {
        const auto path = lay.splits_dir() / fmt::format("{}{}.csv", prefix, plan.trial);
        csv::write_file(path, plan_to_csv(plan));
        std::map<std::string, std::size_t> parts;
        for (const auto& e : plan.entries) {
            ++parts[policy == SplitPolicy::WsiBased ? std::string(to_string(e.part)) : "fold" + std::to_string(e.fold)];
        }
        std::string summary;
        for (const auto& [name, n] : parts) {
            summary += fmt::format(" {}={}", name, n);
        }
        out << path.string() << ":" << summary << "\n";
    }
}

void cmd_train(const PipelineConfig& cfg, const fs::path& plan_path, const fs::path& features_path,
               std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto plan = load_plan(plan_path);
    const auto features = features_from_csv(csv::read_file(features_path), features_path.string());
    const auto stem = plan_stem(plan_path);
    const auto trained = train_on_plan(plan, features, cfg.svm);
    const auto rounds = eval_rounds(plan);
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        csv::write_file(lay.models_dir() / fmt::format("{}_{}.model", stem, rounds[r].name),
                        save_model(trained.models[r]));
    }
    csv::write_file(lay.scores_csv(stem), scores_to_csv(trained.scores));
    out << fmt::format("{} models, {} scored tiles -> {}\n", trained.models.size(), trained.scores.size(),
                       lay.scores_csv(stem).string());
}

void cmd_evaluate(const PipelineConfig& cfg, const fs::path& plan_path, const fs::path& scores_path,
                  std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto plan = load_plan(plan_path);
    const auto scores = scores_from_csv(csv::read_file(scores_path), scores_path.string());
    const auto stem = plan_stem(plan_path);
    const auto reports = evaluate_plan(plan, scores);

    ConfusionMatrix total;
    std::vector<EvalReport> plain;
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < kNumPatterns; ++i) {
            for (std::size_t j = 0; j < kNumPatterns; ++j) {
                total.counts[i][j] += r.report.confusion.counts[i][j];
            }
        }
        plain.push_back(r.report);
    }
    csv::write_file(lay.eval_dir() / (stem + ".csv"), round_reports_to_csv(reports, stem, plan.policy));
    csv::write_file(lay.eval_dir() / (stem + "_confusion.csv"), confusion_to_csv(total));

    out << fmt::format("{:<8} {:>6} {:>8} {:>9} {:>9}\n", "round", "n", "AUCROC", "F1-macro", "accuracy");
    for (const auto& r : reports) {
        out << fmt::format("{:<8} {:>6} {:>8.4f} {:>9.4f} {:>9.4f}\n", r.round, r.report.n_samples,
                           r.report.aucroc_macro, r.report.f1_macro, r.report.accuracy);
    }
    if (reports.size() > 1) {
        const auto s = aggregate_trials(plain);
        out << fmt::format("mean ± std: AUCROC {}  F1-macro {}  accuracy {}\n", format_mean_std(s.aucroc),
                           format_mean_std(s.f1_macro), format_mean_std(s.accuracy));
    }
}

void cmd_export(const PipelineConfig& cfg, const fs::path& plan_path, std::ostream& out)
{
    const Layout lay{cfg.root};
    const auto plan = load_plan(plan_path);
    const auto stem = plan_stem(plan_path);
    const auto index_path = lay.tiles_dir() / "tiles.csv";
    const auto index = csv::read(index_path);
    const auto ci = index.column("tile_id");
    const auto cp = index.column("png");
    std::unordered_map<std::string, fs::path> png;
    for (const auto& row : index.rows) {
        png.emplace(row[ci], lay.tiles_dir() / row[cp]);
    }

    const auto dir = lay.export_dir(stem);
    fs::remove_all(dir);
    fs::create_directories(dir / "tiles");

    csv::Table t;
    t.header = {"tile_id", "slide_id", "label", "assignment", "png"};
    for (const auto& e : plan.entries) {
        const auto it = png.find(e.tile.tile_id);
        if (it == png.end()) {
            throw DataError(fmt::format("{}: no tile PNG for '{}'", index_path.string(), e.tile.tile_id));
        }
        const auto rel = "tiles/" + e.tile.tile_id + ".png";
        fs::copy_file(it->second, dir / rel, fs::copy_options::overwrite_existing);
        const auto assignment =
            plan.policy == SplitPolicy::WsiBased ? std::string(to_string(e.part)) : std::to_string(e.fold);
        t.rows.push_back({e.tile.tile_id, e.tile.slide_id, std::string(to_string(e.tile.label)), assignment, rel});
    }
    csv::write_file(dir / "manifest.csv", csv::to_string(t));
    csv::write_file(dir / "plan.csv", plan_to_csv(plan));
    std::string classes;
    for (const auto p : kAllPatterns) {
        classes += std::string(to_string(p)) + "\n";
    }
    csv::write_file(dir / "classes.txt", classes);
    out << fmt::format("{} tiles -> {}\n", t.rows.size(), dir.string());
}

void cmd_audit(const PipelineConfig& cfg, std::vector<std::string> plan_paths, const fs::path& manifest_path,
               std::ostream& out)
{
    const Layout lay{cfg.root};
    if (plan_paths.empty()) {
        if (!fs::exists(lay.splits_dir())) {
            throw DataError("no plans under " + lay.splits_dir().string() + "; run split first");
        }
        for (const auto& e : fs::directory_iterator(lay.splits_dir())) {
            if (e.path().extension() == ".csv") {
                plan_paths.push_back(e.path().string());
            }
        }
        std::sort(plan_paths.begin(), plan_paths.end());
    }
    const auto manifest = load_manifest(manifest_path);
    std::vector<LeakageReport> reports;
    for (const auto& p : plan_paths) {
        reports.push_back(audit_leakage(load_plan(p), manifest));
        const auto& rep = reports.back();
        std::size_t test_tiles = 0;
        for (const auto& row : rep.rows) {
            test_tiles += row.test_tiles;
        }
        out << fmt::format("{}: {} of {} test tiles share a slide with training\n", fs::path(p).filename().string(),
                           rep.total_leaked(), test_tiles);
    }
    csv::write_file(lay.leakage_csv(), leakage_to_csv(reports));
}

struct ReportRow {
    std::string validation;
    SplitPolicy policy;
    std::vector<EvalReport> rounds;
};

void cmd_report(const PipelineConfig& cfg, std::ostream& out)
{
    const Layout lay{cfg.root};
    if (!fs::exists(lay.eval_dir())) {
        throw DataError("no evaluation results under " + lay.eval_dir().string() + "; run evaluate first");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(lay.eval_dir())) {
        const auto name = e.path().filename().string();
        if (e.path().extension() == ".csv" && !name.ends_with("_confusion.csv")) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::array<ReportRow, 2> rows{{{"weak", SplitPolicy::TileBasedKFold, {}}, {"strong", SplitPolicy::WsiBased, {}}}};
    for (const auto& f : files) {
        const auto t = csv::read(f);
        const auto cp = t.column("policy");
        const auto ca = t.column("aucroc");
        const auto cf = t.column("f1_macro");
        const auto cc = t.column("accuracy");
        for (const auto& r : t.rows) {
            EvalReport rep;
            rep.aucroc_macro = csv::parse_double(r[ca]);
            rep.f1_macro = csv::parse_double(r[cf]);
            rep.accuracy = csv::parse_double(r[cc]);
            auto& target = r[cp] == to_string(SplitPolicy::WsiBased) ? rows[1] : rows[0];
            if (r[cp] != to_string(target.policy)) {
                throw DataError(fmt::format("{}: unknown policy '{}'", f.string(), r[cp]));
            }
            target.rounds.push_back(rep);
        }
    }
    if (rows[0].rounds.empty() && rows[1].rounds.empty()) {
        throw DataError("no evaluation rounds under " + lay.eval_dir().string());
    }

    csv::Table t;
    t.header = {"validation",   "policy",        "n_rounds",      "aucroc_mean", "aucroc_std",
                "f1_macro_mean", "f1_macro_std", "accuracy_mean", "accuracy_std"};
    std::string text = "Cellular-feature SVM\n";
    text += fmt::format("{:<11} {:<7} {:>6}  {:<13} {:<13} {:<13}\n", "validation", "policy", "rounds", "AUCROC",
                        "F1-macro", "accuracy");
    for (const auto& row : rows) {
        std::vector<std::string> cells = {row.validation, std::string(to_string(row.policy)),
                                          std::to_string(row.rounds.size())};
        if (row.rounds.empty()) {
            cells.resize(t.header.size());
            text += fmt::format("{:<11} {:<7} {:>6}  {:<13} {:<13} {:<13}\n", row.validation, to_string(row.policy),
                                0, "n/a", "n/a", "n/a");
        } else {
            const auto s = aggregate_trials(row.rounds);
            for (const auto* m : {&s.aucroc, &s.f1_macro, &s.accuracy}) {
                cells.push_back(csv::format_double(m->mean));
                cells.push_back(csv::format_double(m->stddev));
            }
            // Pad by display width; the ± sign is two bytes in UTF-8.
            auto cell = [](const MetricSummary& m) { return fmt::format("{:<14}", format_mean_std(m)); };
            text += fmt::format("{:<11} {:<7} {:>6}  {}{}{}\n", row.validation, to_string(row.policy),
                                row.rounds.size(), cell(s.aucroc), cell(s.f1_macro), cell(s.accuracy));
        }
        t.rows.push_back(std::move(cells));
    }
    csv::write_file(lay.root / "report.csv", csv::to_string(t));
    csv::write_file(lay.root / "report.txt", text);
    out << text;
}

std::uint64_t parse_seed(const std::string& s, const char* what)
{
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
        throw ConfigError(fmt::format("{} is not an unsigned integer: '{}'", what, s));
    }
    return v;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cell-map growth-pattern pipeline", "cellmap"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config_path;
    std::string root;
    std::size_t jobs = 0;
    auto* opt_root = app.add_option("--root", root, "Run directory (overrides io.root)");
    app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--jobs", jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

    std::string slides;
    std::string manifest;
    std::string plan;
    std::string scores;
    std::string features;
    std::vector<std::string> plans;

    int classes = static_cast<int>(kNumPatterns);
    std::size_t per_class = 0;
    std::uint64_t seed = 0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled cohort");
    synth->add_option("--classes", classes, "Number of growth patterns (must be 6)");
    auto* opt_per_class = synth->add_option("--per-class", per_class, "Slides per pattern")->check(CLI::PositiveNumber);
    auto* opt_synth_seed = synth->add_option("--seed", seed, "Cohort seed");

    auto* ingest = app.add_subcommand("ingest", "Parse detector JSON into nucleus tables");
    ingest->add_option("--slides", slides, "Slide list CSV (default: <root>/cohort/slides.csv)");
    auto* rasterize = app.add_subcommand("rasterize", "Render whole-slide cell maps");
    rasterize->add_option("--slides", slides, "Slide list CSV");
    auto* tile = app.add_subcommand("tile", "Cut cell maps into PNG tiles");
    tile->add_option("--slides", slides, "Slide list CSV");
    auto* featurize = app.add_subcommand("featurize", "Compute the 12 cellular features per tile");
    featurize->add_option("--slides", slides, "Slide list CSV");
    featurize->add_option("--manifest", manifest, "Tile manifest CSV (default: <root>/cohort/manifest.csv)");

    std::string policy_name = "wsi";
    int trials = 0;
    std::size_t test_slides = 0;
    double val_fraction = 0.0;
    int k = 0;
    auto* split = app.add_subcommand("split", "Write split plans");
    split->add_option("--policy", policy_name, "wsi or tile")->check(CLI::IsMember({"wsi", "tile"}));
    split->add_option("--manifest", manifest, "Tile manifest CSV");
    auto* opt_trials = split->add_option("--trials", trials, "Number of plans")->check(CLI::PositiveNumber);
    auto* opt_test_slides = split->add_option("--test-slides", test_slides, "Test slides per WSI split");
    auto* opt_val = split->add_option("--val-fraction", val_fraction, "Validation share of remaining tiles");
    auto* opt_k = split->add_option("--k", k, "Folds for the tile policy");
    auto* opt_split_seed = split->add_option("--seed", seed, "Split seed");

    int epochs = 0;
    double eta0 = 0.0;
    double lambda = 0.0;
    auto* train = app.add_subcommand("train-svm", "Train and score the feature SVM on a plan");
    train->add_option("--plan", plan, "Split plan CSV")->required();
    train->add_option("--features", features, "Feature CSV (default: <root>/features.csv)");
    auto* opt_epochs = train->add_option("--epochs", epochs, "SGD epochs")->check(CLI::PositiveNumber);
    auto* opt_eta0 = train->add_option("--eta0", eta0, "Initial step size");
    auto* opt_lambda = train->add_option("--lambda", lambda, "L2 regularization");
    auto* opt_svm_seed = train->add_option("--seed", seed, "SGD seed");

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a plan");
    evaluate->add_option("--plan", plan, "Split plan CSV")->required();
    evaluate->add_option("--scores", scores, "Score CSV (default: <root>/scores/<plan>.csv)");

    auto* exporter = app.add_subcommand("export-dataset", "Export tiles and assignments for CNN training");
    exporter->add_option("--plan", plan, "Split plan CSV")->required();

    auto* audit = app.add_subcommand("audit-splits", "Count slide leakage between train and test");
    audit->add_option("--plan", plans, "Plan CSVs (default: every plan under <root>/splits)");
    audit->add_option("--manifest", manifest, "Tile manifest CSV");

    auto* report = app.add_subcommand("report", "Summarize weak and strong validation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << one_line(e.what()) << "\n";
        return kExitUsage;
    }

    try {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (const char* env = std::getenv("CELLMAP_SEED"); env != nullptr && *env != '\0') {
            cfg.set_global_seed(parse_seed(env, "CELLMAP_SEED"));
        }
        if (opt_root->count() > 0) {
            cfg.root = root;
        }
        if (opt_per_class->count() > 0) {
            cfg.synth.per_class = per_class;
        }
        if (opt_synth_seed->count() > 0) {
            cfg.synth.base_seed = seed;
        }
        if (opt_test_slides->count() > 0) {
            cfg.wsi.n_test_slides = test_slides;
        }
        if (opt_val->count() > 0) {
            cfg.wsi.val_fraction = val_fraction;
        }
        if (opt_k->count() > 0) {
            cfg.k = k;
        }
        if (opt_split_seed->count() > 0) {
            cfg.split_seed = seed;
        }
        if (opt_epochs->count() > 0) {
            cfg.svm.epochs = epochs;
        }
        if (opt_eta0->count() > 0) {
            cfg.svm.eta0 = eta0;
        }
        if (opt_lambda->count() > 0) {
            cfg.svm.lambda = lambda;
        }
        if (opt_svm_seed->count() > 0) {
            cfg.svm.seed = seed;
        }
        cfg.validate();

        const Layout lay{cfg.root};
        const std::size_t workers = jobs == 0 ? default_jobs() : jobs;
        const fs::path slides_path = slides.empty() ? lay.slides_csv() : fs::path(slides);
        const fs::path manifest_path = manifest.empty() ? lay.manifest_csv() : fs::path(manifest);

        if (synth->parsed()) {
            cmd_synth(cfg, classes, out);
        } else if (ingest->parsed()) {
            cmd_ingest(cfg, workers, slides_path, out);
        } else if (rasterize->parsed()) {
            cmd_rasterize(cfg, workers, slides_path, out);
        } else if (tile->parsed()) {
            cmd_tile(cfg, workers, slides_path, out);
        } else if (featurize->parsed()) {
            cmd_featurize(cfg, workers, slides_path, manifest_path, out);
        } else if (split->parsed()) {
            const auto policy = policy_name == "tile" ? SplitPolicy::TileBasedKFold : SplitPolicy::WsiBased;
            const int n = opt_trials->count() > 0 ? trials : policy == SplitPolicy::WsiBased ? cfg.trials : 1;
            cmd_split(cfg, policy, n, manifest_path, out);
        } else if (train->parsed()) {
            cmd_train(cfg, plan, features.empty() ? lay.features_csv() : fs::path(features), out);
        } else if (evaluate->parsed()) {
            cmd_evaluate(cfg, plan, scores.empty() ? lay.scores_csv(plan_stem(plan)) : fs::path(scores), out);
        } else if (exporter->parsed()) {
            cmd_export(cfg, plan, out);
        } else if (audit->parsed()) {
            cmd_audit(cfg, plans, manifest_path, out);
        } else if (report->parsed()) {
            cmd_report(cfg, out);
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: config: " << one_line(e.what()) << "\n";
        return kExitConfig;
    } catch (const boost::property_tree::ptree_error& e) {
        err << "error: config: " << one_line(e.what()) << "\n";
        return kExitConfig;
    } catch (const InfeasibleSplit& e) {
        err << "error: infeasible-split: " << one_line(e.what()) << "\n";
        return kExitInfeasible;
    } catch (const DataError& e) {
        err << "error: data: " << one_line(e.what()) << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "error: data: " << one_line(e.what()) << "\n";
        return kExitData;
    }
}

} // namespace cellmap::cli
