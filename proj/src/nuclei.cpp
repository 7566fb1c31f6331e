#include "cellmap/nuclei.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace cellmap {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, kNumCellClasses> kClassNames = {
    "neoplastic", "inflammatory", "connective", "dead", "non_neoplastic_epithelial", "unlabeled",
};

std::optional<std::int64_t> key_as_integer(std::string_view key)
{
    std::int64_t v = 0;
    const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), v);
    if (ec != std::errc{} || end != key.data() + key.size() || key.empty()) {
        return std::nullopt;
    }
    return v;
}

std::size_t line_of(std::string_view text, std::size_t byte)
{
    const auto upto = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
}

// Returns the record or an explanation of why the entry is unusable.
std::optional<NucleusRecord> decode_entry(const json& entry, const ClassCodeTable& table, std::string& why)
{
    if (!entry.is_object()) {
        why = "entry is not an object";
        return std::nullopt;
    }
    const auto centroid = entry.find("centroid");
    if (centroid == entry.end() || !centroid->is_array() || centroid->size() != 2 ||
        !(*centroid)[0].is_number() || !(*centroid)[1].is_number()) {
        why = "centroid must be a 2-element numeric array";
        return std::nullopt;
    }
    const auto type = entry.find("type");
    if (type == entry.end() || !type->is_number_integer()) {
        why = "type must be an integer";
        return std::nullopt;
    }
    NucleusRecord rec;
    rec.x = (*centroid)[0].get<double>();
    rec.y = (*centroid)[1].get<double>();
    if (!std::isfinite(rec.x) || !std::isfinite(rec.y) || rec.x < 0.0 || rec.y < 0.0) {
        why = "centroid must be finite and non-negative";
        return std::nullopt;
    }
    const auto code = type->get<std::int64_t>();
    const auto cls = table.lookup(code);
    if (!cls) {
        why = "unknown type code " + std::to_string(code);
        return std::nullopt;
    }
    rec.cell_class = *cls;
    if (const auto prob = entry.find("type_prob"); prob != entry.end() && prob->is_number()) {
        rec.type_confidence = prob->get<double>();
    }
    return rec;
}

} // namespace

std::string_view to_string(CellClass c)
{
    return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<CellClass> parse_cell_class(std::string_view s)
{
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == s) {
            return static_cast<CellClass>(i);
        }
    }
    return std::nullopt;
}

void SlideMeta::validate() const
{
    if (!(width_px > 0.0) || !(height_px > 0.0)) {
        throw DataError("slide '" + slide_id + "': dimensions must be positive");
    }
    if (!(map_mag > 0.0) || !(detection_mag > map_mag)) {
        throw DataError("slide '" + slide_id + "': need detection_mag > map_mag > 0");
    }
}

ClassCodeTable ClassCodeTable::pannuke()
{
    return ClassCodeTable({
        {0, CellClass::Unlabeled},
        {1, CellClass::Neoplastic},
        {2, CellClass::Inflammatory},
        {3, CellClass::Connective},
        {4, CellClass::Dead},
        {5, CellClass::NonNeoplasticEpithelial},
    });
}

std::optional<CellClass> ClassCodeTable::lookup(std::int64_t code) const
{
    if (const auto it = codes_.find(code); it != codes_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::optional<std::int64_t> ClassCodeTable::code_of(CellClass c) const
{
    for (const auto& [code, cls] : codes_) {
        if (cls == c) {
            return code;
        }
    }
    return std::nullopt;
}

std::string_view to_string(UnknownCodePolicy p)
{
    return p == UnknownCodePolicy::Strict ? "strict" : "skip";
}

std::optional<UnknownCodePolicy> parse_unknown_code_policy(std::string_view s)
{
    if (s == "strict") {
        return UnknownCodePolicy::Strict;
    }
    if (s == "skip") {
        return UnknownCodePolicy::Skip;
    }
    return std::nullopt;
}

ParsedNuclei parse_nuclei(std::string_view document, const ClassCodeTable& table, UnknownCodePolicy policy)
{
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError("malformed nuclei JSON", e.byte, line_of(document, e.byte));
    }
    if (!doc.is_object()) {
        throw ParseError("nuclei JSON must be an object", 1, 1);
    }

    ParsedNuclei out;
    if (const auto mag = doc.find("mag"); mag != doc.end() && mag->is_number()) {
        out.magnification = mag->get<double>();
    }
    const auto nuc = doc.find("nuc");
    if (nuc == doc.end() || !nuc->is_object()) {
        throw DataError("nuclei JSON has no 'nuc' object");
    }

    // json objects iterate in key text order; a stable sort on the integer
    // value therefore breaks ties textually.
    std::vector<std::pair<std::string_view, const json*>> entries;
    entries.reserve(nuc->size());
    for (const auto& [key, value] : nuc->items()) {
        entries.emplace_back(key, &value);
    }
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        const auto ka = key_as_integer(a.first);
        const auto kb = key_as_integer(b.first);
        if (ka && kb) {
            return *ka < *kb;
        }
        return ka.has_value() && !kb.has_value();
    });

    out.total_entries = entries.size();
    out.records.reserve(entries.size());
    std::string why;
    for (const auto& [key, value] : entries) {
        if (auto rec = decode_entry(*value, table, why)) {
            out.records.push_back(*rec);
            continue;
        }
        if (policy == UnknownCodePolicy::Strict) {
            throw DataError("nucleus '" + std::string(key) + "': " + why);
        }
        ++out.rejected;
    }
    return out;
}

std::string emit_nuclei_json(std::span<const NucleusRecord> records, double magnification,
                             const ClassCodeTable& table)
{
    json nuc = json::object();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto code = table.code_of(r.cell_class);
        if (!code) {
            throw DataError("class '" + std::string(to_string(r.cell_class)) + "' has no type code");
        }
        json entry = {{"centroid", {r.x, r.y}}, {"type", *code}};
        if (r.type_confidence) {
            entry["type_prob"] = *r.type_confidence;
        }
        nuc[std::to_string(i + 1)] = std::move(entry);
    }
    json doc = {{"mag", magnification}, {"nuc", std::move(nuc)}};
    return doc.dump();
}

std::vector<NucleusRecord> filter_classes(std::span<const NucleusRecord> records, CellClassSet keep)
{
    std::vector<NucleusRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out),
                 [keep](const NucleusRecord& r) { return keep.contains(r.cell_class); });
    return out;
}

MapPoint rescale_to_map(const NucleusRecord& record, const SlideMeta& meta)
{
    const double s = meta.scale();
    return {record.x * s, record.y * s};
}

std::string nuclei_to_csv(std::span<const NucleusRecord> records)
{
    csv::Table t;
    t.header = {"x", "y", "class", "confidence"};
    t.rows.reserve(records.size());
    for (const auto& r : records) {
        t.rows.push_back({csv::format_double(r.x), csv::format_double(r.y), std::string(to_string(r.cell_class)),
                          r.type_confidence ? csv::format_double(*r.type_confidence) : std::string()});
    }
    return csv::to_string(t);
}

std::vector<NucleusRecord> nuclei_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto cx = t.column("x");
    const auto cy = t.column("y");
    const auto cc = t.column("class");
    const auto cp = t.column("confidence");
    std::vector<NucleusRecord> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        NucleusRecord r;
        r.x = csv::parse_double(row[cx]);
        r.y = csv::parse_double(row[cy]);
        const auto cls = parse_cell_class(row[cc]);
        if (!cls) {
            throw DataError(std::string(origin) + ": unknown cell class '" + row[cc] + "'");
        }
        r.cell_class = *cls;
        if (!row[cp].empty()) {
            r.type_confidence = csv::parse_double(row[cp]);
        }
        out.push_back(r);
    }
    return out;
}

} // namespace cellmap
