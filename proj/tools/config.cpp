#include "config.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <set>
#include <sstream>

namespace cellmap::cli {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "io.root",
        "ingest.codes",       "ingest.policy",
        "raster.disk_radius", "raster.map_mag",      "raster.detection_mag", "raster.tile_size",
        "splits.seed",        "splits.trials",       "splits.test_slides",   "splits.val_fraction",
        "splits.k",           "splits.budget",
        "svm.epochs",         "svm.eta0",            "svm.lambda",           "svm.seed",
        "synth.per_class",    "synth.seed",          "synth.width",          "synth.height",
        "synth.inflammatory_mean",
    };
    return keys;
}

std::uint64_t parse_u64(std::string_view s, std::string_view key)
{
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
        throw ConfigError(std::string(key) + " is not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

template <typename T>
T number(const std::string& s, std::string_view key)
{
    try {
        if constexpr (std::is_floating_point_v<T>) {
            return static_cast<T>(csv::parse_double(s));
        } else {
            return static_cast<T>(csv::parse_int(s));
        }
    } catch (const DataError&) {
        throw ConfigError(std::string(key) + " is not a number: '" + s + "'");
    }
}

} // namespace

void PipelineConfig::validate() const
{
    raster.validate();
    if (trials < 1) {
        throw ConfigError("splits.trials must be >= 1");
    }
    if (k < 2) {
        throw ConfigError("splits.k must be >= 2");
    }
    if (wsi.n_test_slides < 1) {
        throw ConfigError("splits.test_slides must be >= 1");
    }
    if (!(wsi.val_fraction >= 0.0 && wsi.val_fraction < 1.0)) {
        throw ConfigError("splits.val_fraction must be in [0, 1)");
    }
    if (wsi.resample_budget < 1) {
        throw ConfigError("splits.budget must be >= 1");
    }
    if (svm.epochs < 0 || !(svm.eta0 > 0.0) || !(svm.lambda > 0.0)) {
        throw ConfigError("svm needs epochs >= 0, eta0 > 0, lambda > 0");
    }
    if (synth.per_class < 1) {
        throw ConfigError("synth.per_class must be >= 1");
    }
    if (synth.width < raster.footprint() || synth.height < raster.footprint()) {
        throw ConfigError("synth extent is smaller than one tile footprint");
    }
    if (codes.codes().empty()) {
        throw ConfigError("ingest.codes is empty");
    }
}

void PipelineConfig::set_global_seed(std::uint64_t seed)
{
    split_seed = seed;
    svm.seed = seed;
    synth.base_seed = seed;
}

std::string render_code_table(const ClassCodeTable& table)
{
    std::string out;
    for (const auto& [code, cls] : table.codes()) {
        if (!out.empty()) {
            out += ',';
        }
        out += std::to_string(code) + ':' + std::string(to_string(cls));
    }
    return out;
}

ClassCodeTable parse_code_table(std::string_view text)
{
    std::map<std::int64_t, CellClass> codes;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(',', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const auto item = text.substr(start, end - start);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ConfigError("code table entry '" + std::string(item) + "' is not code:class");
        }
        std::int64_t code = 0;
        const auto num = item.substr(0, colon);
        const auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), code);
        if (num.empty() || ec != std::errc{} || p != num.data() + num.size()) {
            throw ConfigError("bad type code '" + std::string(num) + "'");
        }
        const auto cls = parse_cell_class(item.substr(colon + 1));
        if (!cls) {
            throw ConfigError("unknown cell class '" + std::string(item.substr(colon + 1)) + "'");
        }
        if (!codes.emplace(code, *cls).second) {
            throw ConfigError("duplicate type code " + std::to_string(code));
        }
        start = end + 1;
    }
    return ClassCodeTable(std::move(codes));
}

PipelineConfig parse_config(std::string_view text)
{
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("key '" + section + "' must live in a section");
        }
        for (const auto& [key, value] : body) {
            const auto full = section + "." + key;
            if (!known_keys().contains(full)) {
                throw ConfigError("unknown key '" + full + "'");
            }
        }
    }

    PipelineConfig c;
    auto get = [&tree](const char* key) { return tree.get_optional<std::string>(pt::ptree::path_type(key, '.')); };
    if (auto v = get("io.root")) {
        c.root = *v;
    }
    if (auto v = get("ingest.codes")) {
        c.codes = parse_code_table(*v);
    }
    if (auto v = get("ingest.policy")) {
        const auto p = parse_unknown_code_policy(*v);
        if (!p) {
            throw ConfigError("ingest.policy must be strict or skip");
        }
        c.policy = *p;
    }
    if (auto v = get("raster.disk_radius")) {
        c.raster.disk_radius = number<int>(*v, "raster.disk_radius");
    }
    if (auto v = get("raster.map_mag")) {
        c.raster.map_mag = number<double>(*v, "raster.map_mag");
    }
    if (auto v = get("raster.detection_mag")) {
        c.raster.detection_mag = number<double>(*v, "raster.detection_mag");
    }
    if (auto v = get("raster.tile_size")) {
        c.raster.tile_size = number<int>(*v, "raster.tile_size");
    }
    if (auto v = get("splits.seed")) {
        c.split_seed = parse_u64(*v, "splits.seed");
    }
    if (auto v = get("splits.trials")) {
        c.trials = number<int>(*v, "splits.trials");
    }
    if (auto v = get("splits.test_slides")) {
        c.wsi.n_test_slides = parse_u64(*v, "splits.test_slides");
    }
    if (auto v = get("splits.val_fraction")) {
        c.wsi.val_fraction = number<double>(*v, "splits.val_fraction");
    }
    if (auto v = get("splits.k")) {
        c.k = number<int>(*v, "splits.k");
    }
    if (auto v = get("splits.budget")) {
        c.wsi.resample_budget = parse_u64(*v, "splits.budget");
    }
    if (auto v = get("svm.epochs")) {
        c.svm.epochs = number<int>(*v, "svm.epochs");
    }
    if (auto v = get("svm.eta0")) {
        c.svm.eta0 = number<double>(*v, "svm.eta0");
    }
    if (auto v = get("svm.lambda")) {
        c.svm.lambda = number<double>(*v, "svm.lambda");
    }
    if (auto v = get("svm.seed")) {
        c.svm.seed = parse_u64(*v, "svm.seed");
    }
    if (auto v = get("synth.per_class")) {
        c.synth.per_class = parse_u64(*v, "synth.per_class");
    }
    if (auto v = get("synth.seed")) {
        c.synth.base_seed = parse_u64(*v, "synth.seed");
    }
    if (auto v = get("synth.width")) {
        c.synth.width = number<double>(*v, "synth.width");
    }
    if (auto v = get("synth.height")) {
        c.synth.height = number<double>(*v, "synth.height");
    }
    if (auto v = get("synth.inflammatory_mean")) {
        c.synth.inflammatory_mean = number<double>(*v, "synth.inflammatory_mean");
    }
    c.synth.detection_mag = c.raster.detection_mag;
    c.synth.map_mag = c.raster.map_mag;
    c.synth.tile_footprint = c.raster.footprint();
    c.validate();
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = csv::read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string render_config(const PipelineConfig& c)
{
    using csv::format_double;
    std::string out;
    out += "[io]\nroot = " + c.root.string() + "\n\n";
    out += "[ingest]\ncodes = " + render_code_table(c.codes) + "\npolicy = " + std::string(to_string(c.policy)) + "\n\n";
    out += "[raster]\ndisk_radius = " + std::to_string(c.raster.disk_radius) + "\nmap_mag = " +
           format_double(c.raster.map_mag) + "\ndetection_mag = " + format_double(c.raster.detection_mag) +
           "\ntile_size = " + std::to_string(c.raster.tile_size) + "\n\n";
    out += "[splits]\nseed = " + std::to_string(c.split_seed) + "\ntrials = " + std::to_string(c.trials) +
           "\ntest_slides = " + std::to_string(c.wsi.n_test_slides) + "\nval_fraction = " +
           format_double(c.wsi.val_fraction) + "\nk = " + std::to_string(c.k) + "\nbudget = " +
           std::to_string(c.wsi.resample_budget) + "\n\n";
    out += "[svm]\nepochs = " + std::to_string(c.svm.epochs) + "\neta0 = " + format_double(c.svm.eta0) +
           "\nlambda = " + format_double(c.svm.lambda) + "\nseed = " + std::to_string(c.svm.seed) + "\n\n";
    out += "[synth]\nper_class = " + std::to_string(c.synth.per_class) + "\nseed = " +
           std::to_string(c.synth.base_seed) + "\nwidth = " + format_double(c.synth.width) + "\nheight = " +
           format_double(c.synth.height) + "\ninflammatory_mean = " + format_double(c.synth.inflammatory_mean) + "\n";
    return out;
}

} // namespace cellmap::cli
