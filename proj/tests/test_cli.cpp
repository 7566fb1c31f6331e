#include "cli.hpp"
#include "config.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace cellmap;
using namespace cellmap::cli;

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_args(std::vector<std::string> args)
{
    args.insert(args.begin(), "cellmap");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("cellmap_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("config defaults and round trip")
{
    const PipelineConfig defaults;
    CHECK(parse_config("") == defaults);
    CHECK(parse_config(render_config(defaults)) == defaults);

    PipelineConfig c;
    c.root = "elsewhere";
    c.policy = UnknownCodePolicy::Skip;
    c.codes = parse_code_table("0:unlabeled,1:neoplastic,9:connective");
    c.raster.tile_size = 128;
    c.split_seed = 99;
    c.trials = 3;
    c.wsi.val_fraction = 0.2;
    c.k = 4;
    c.svm = {10, 0.05, 1e-4, 3};
    c.synth.per_class = 2;
    c.synth.inflammatory_mean = 1.5e-5;
    c.synth.tile_footprint = c.raster.footprint();
    CHECK(parse_config(render_config(c)) == c);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("[svm]\nepochs = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[svm]\nmomentum = 0.9\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[ingest]\npolicy = lenient\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[splits]\nk = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_code_table("1:neoplastic,1:dead"), ConfigError);
    CHECK_THROWS_AS(parse_code_table("x:neoplastic"), ConfigError);
}

TEST_CASE("global seed override touches every seed")
{
    PipelineConfig c;
    c.set_global_seed(123);
    CHECK(c.split_seed == 123);
    CHECK(c.svm.seed == 123);
    CHECK(c.synth.base_seed == 123);
}

TEST_CASE("exit codes")
{
    const auto dir = scratch("codes");
    CHECK(run_args({}).code == kExitUsage);
    CHECK(run_args({"frobnicate"}).code == kExitUsage);
    CHECK(run_args({"split", "--bogus"}).code == kExitUsage);

    const auto bad = dir / "bad.ini";
    csv::write_file(bad, "[svm]\nepochs = x\n");
    const auto r = run_args({"--config", bad.string(), "report"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.starts_with("error: config: "));
    CHECK(r.err.find('\n') == r.err.size() - 1);

    CHECK(run_args({"--root", (dir / "run").string(), "synth", "--classes", "4"}).code == kExitConfig);
    const auto missing = run_args({"--root", (dir / "run").string(), "featurize"});
    CHECK(missing.code == kExitData);
    CHECK(missing.err.starts_with("error: data: "));
    CHECK(run_args({"--help"}).code == kExitOk);
    fs::remove_all(dir);
}

TEST_CASE("small pipeline run")
{
    const auto dir = scratch("small");
    const auto ini = dir / "small.ini";
    csv::write_file(ini, "[io]\nroot = " + (dir / "run").string() +
                             "\n[synth]\nper_class = 2\nwidth = 2048\nheight = 2048\n[svm]\nepochs = 20\n");
    const std::vector<std::string> base = {"--config", ini.string(), "--jobs", "2"};
    auto step = [&](std::vector<std::string> args) {
        args.insert(args.begin(), base.begin(), base.end());
        const auto r = run_args(args);
        INFO(r.err);
        REQUIRE(r.code == kExitOk);
        return r;
    };
    const fs::path root = dir / "run";

    step({"synth"});
    CHECK(fs::exists(root / "cohort" / "slides" / "synth_solid_1.json"));
    step({"ingest"});
    step({"rasterize"});
    step({"tile"});
    CHECK(fs::exists(root / "tiles" / "synth_solid_1_r1_c1.png"));
    step({"featurize"});
    step({"split", "--policy", "wsi", "--trials", "2"});
    step({"split", "--policy", "tile"});
    CHECK(fs::exists(root / "splits" / "wsi_t1.csv"));
    CHECK(fs::exists(root / "splits" / "tile_t0.csv"));

    for (const auto* stem : {"wsi_t0", "wsi_t1", "tile_t0"}) {
        const auto plan = (root / "splits" / (std::string(stem) + ".csv")).string();
        step({"train-svm", "--plan", plan});
        const auto ev = step({"evaluate", "--plan", plan});
        CHECK(ev.out.find("AUCROC") != std::string::npos);
        CHECK(ev.out.find("F1-macro") != std::string::npos);
        CHECK(ev.out.find("accuracy") != std::string::npos);
    }
    CHECK(fs::exists(root / "models" / "tile_t0_fold4.model"));

    step({"audit-splits"});
    const auto leak = csv::read(root / "audit" / "leakage.csv");
    for (const auto& row : leak.rows) {
        if (row[leak.column("policy")] == "wsi") {
            CHECK(row[leak.column("leaked_tiles")] == "0");
        }
    }

    step({"export-dataset", "--plan", (root / "splits" / "wsi_t0.csv").string()});
    const auto exported = csv::read(root / "export" / "wsi_t0" / "manifest.csv");
    CHECK(exported.rows.size() == 12 * 4);
    CHECK(fs::exists(root / "export" / "wsi_t0" / exported.rows[0][exported.column("png")]));

    const auto rep = step({"report"});
    CHECK(rep.out.find("strong") != std::string::npos);
    const auto first = csv::read_file(root / "report.csv");

    // A second split run with fewer trials must not leave stale plans behind.
    step({"split", "--policy", "wsi", "--trials", "1"});
    CHECK_FALSE(fs::exists(root / "splits" / "wsi_t1.csv"));

    // Re-running a step overwrites with identical output.
    const auto features = csv::read_file(root / "features.csv");
    step({"featurize"});
    CHECK(csv::read_file(root / "features.csv") == features);
    CHECK(!first.empty());
    fs::remove_all(dir);
}

TEST_CASE("seed precedence: flag over environment over config")
{
    const auto dir = scratch("seed");
    const auto root = (dir / "run").string();
    auto plan_seed = [&] {
        const auto t = csv::read(dir / "run" / "splits" / "tile_t0.csv");
        return t.rows.at(0)[t.column("seed")];
    };
    Manifest m;
    for (int i = 0; i < 20; ++i) {
        m.push_back({"s_r0_c" + std::to_string(i), "s", kAllPatterns[i % 6]});
    }
    const auto manifest = dir / "m.csv";
    csv::write_file(manifest, manifest_to_csv(m));

    REQUIRE(run_args({"--root", root, "split", "--policy", "tile", "--manifest", manifest.string()}).code == 0);
    CHECK(plan_seed() == "7");
    ::setenv("CELLMAP_SEED", "55", 1);
    REQUIRE(run_args({"--root", root, "split", "--policy", "tile", "--manifest", manifest.string()}).code == 0);
    CHECK(plan_seed() == "55");
    REQUIRE(run_args({"--root", root, "split", "--policy", "tile", "--manifest", manifest.string(), "--seed", "8"})
                .code == 0);
    CHECK(plan_seed() == "8");
    ::setenv("CELLMAP_SEED", "nope", 1);
    CHECK(run_args({"--root", root, "report"}).code == kExitConfig);
    ::unsetenv("CELLMAP_SEED");
    fs::remove_all(dir);
}
