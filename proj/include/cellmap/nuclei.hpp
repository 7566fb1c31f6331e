#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cellmap {

/// Nucleus taxonomy of the PanNuke-trained detector.
enum class CellClass : std::uint8_t {
    Neoplastic = 0,
    Inflammatory,
    Connective,
    Dead,
    NonNeoplasticEpithelial,
    Unlabeled,
};

inline constexpr std::size_t kNumCellClasses = 6;

std::string_view to_string(CellClass c);
std::optional<CellClass> parse_cell_class(std::string_view s);

/// Small value set of cell classes.
class CellClassSet {
public:
    constexpr CellClassSet() = default;
    constexpr CellClassSet(std::initializer_list<CellClass> classes)
    {
        for (const auto c : classes) {
            insert(c);
        }
    }

    static constexpr CellClassSet all()
    {
        return {CellClass::Neoplastic, CellClass::Inflammatory, CellClass::Connective,
                CellClass::Dead,       CellClass::NonNeoplasticEpithelial, CellClass::Unlabeled};
    }

    constexpr void insert(CellClass c) { bits_ |= bit(c); }
    constexpr bool contains(CellClass c) const { return (bits_ & bit(c)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    friend constexpr bool operator==(CellClassSet, CellClassSet) = default;

private:
    static constexpr std::uint8_t bit(CellClass c) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c)); }
    std::uint8_t bits_ = 0;
};

/// Classes drawn into cell maps.
inline constexpr CellClassSet kRenderedClasses{CellClass::Neoplastic, CellClass::Connective,
                                               CellClass::NonNeoplasticEpithelial};
/// Classes summarized by the 12-feature vector.
inline constexpr CellClassSet kFeatureClasses{CellClass::Neoplastic, CellClass::NonNeoplasticEpithelial,
                                              CellClass::Connective, CellClass::Inflammatory};

/// One detected nucleus; centroid in slide pixels at detection magnification.
struct NucleusRecord {
    double x = 0.0;
    double y = 0.0;
    CellClass cell_class = CellClass::Unlabeled;
    std::optional<double> type_confidence;

    friend bool operator==(const NucleusRecord&, const NucleusRecord&) = default;
};

struct SlideMeta {
    std::string slide_id;
    double width_px = 0.0;
    double height_px = 0.0;
    double detection_mag = 20.0;
    double map_mag = 5.0;

    /// Throws DataError unless dimensions are positive and detection_mag > map_mag > 0.
    void validate() const;
    /// map_mag / detection_mag.
    double scale() const { return map_mag / detection_mag; }
};

/// Integer detector type code -> cell class.
class ClassCodeTable {
public:
    ClassCodeTable() = default;
    explicit ClassCodeTable(std::map<std::int64_t, CellClass> codes) : codes_(std::move(codes)) {}

    /// 0 unlabeled, 1 neoplastic, 2 inflammatory, 3 connective, 4 dead,
    /// 5 non-neoplastic epithelial.
    static ClassCodeTable pannuke();

    std::optional<CellClass> lookup(std::int64_t code) const;
    /// Code for a class (first match), used when writing detector-format files.
    std::optional<std::int64_t> code_of(CellClass c) const;
    const std::map<std::int64_t, CellClass>& codes() const { return codes_; }

    friend bool operator==(const ClassCodeTable&, const ClassCodeTable&) = default;

private:
    std::map<std::int64_t, CellClass> codes_;
};

enum class UnknownCodePolicy { Strict, Skip };

std::string_view to_string(UnknownCodePolicy p);
std::optional<UnknownCodePolicy> parse_unknown_code_policy(std::string_view s);

struct ParsedNuclei {
    std::vector<NucleusRecord> records;
    /// Top-level `mag` of the document, when present.
    std::optional<double> magnification;
    std::size_t total_entries = 0;
    std::size_t rejected = 0;
};

/// Parses a detector whole-slide JSON document (`mag` + `nuc` object keyed by
/// nucleus id, each entry with `centroid` [x, y] and integer `type`).
///
/// Records come out ordered by the entry key read as an integer (non-integer
/// keys after all integer ones), ties by key text. Malformed JSON throws
/// ParseError. Invalid entries (bad centroid, unknown code, wrong shape) throw
/// DataError under Strict and are counted in `rejected` under Skip.
ParsedNuclei parse_nuclei(std::string_view document, const ClassCodeTable& table,
                          UnknownCodePolicy policy = UnknownCodePolicy::Strict);

/// Inverse of parse_nuclei for records whose classes the table can encode.
/// Keys are 1-based positions; numbers are written in shortest round-trip form.
std::string emit_nuclei_json(std::span<const NucleusRecord> records, double magnification,
                             const ClassCodeTable& table);

/// Order-preserving subsequence whose classes are in `keep`.
std::vector<NucleusRecord> filter_classes(std::span<const NucleusRecord> records, CellClassSet keep);

struct MapPoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const MapPoint&, const MapPoint&) = default;
};

/// Centroid in cell-map pixels; no rounding.
MapPoint rescale_to_map(const NucleusRecord& record, const SlideMeta& meta);

/// Lossless CSV form of a record list: x,y,class,confidence.
std::string nuclei_to_csv(std::span<const NucleusRecord> records);
std::vector<NucleusRecord> nuclei_from_csv(std::string_view text, std::string_view origin = "<memory>");

} // namespace cellmap
