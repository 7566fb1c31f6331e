#pragma once

#include "cellmap/growth_pattern.hpp"
#include "cellmap/nuclei.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cellmap {

struct RasterConfig {
    int disk_radius = 4;
    double map_mag = 5.0;
    double detection_mag = 20.0;
    int tile_size = 256;

    void validate() const;
    /// Side of one tile's footprint in detection-magnification pixels.
    double footprint() const { return tile_size * detection_mag / map_mag; }

    friend bool operator==(const RasterConfig&, const RasterConfig&) = default;
};

/// Row-major binary raster; every value is 0 or 1.
class BinaryPlane {
public:
    BinaryPlane() = default;
    BinaryPlane(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    void set(int x, int y) { data_[index(x, y)] = 1; }

    std::span<const std::uint8_t> data() const { return data_; }
    std::size_t count_set() const;

    friend bool operator==(const BinaryPlane&, const BinaryPlane&) = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Plane order of every cell map and tile.
enum class MapPlane : std::size_t { Neoplastic = 0, Connective = 1, NonNeoplastic = 2 };
inline constexpr std::size_t kNumPlanes = 3;

/// Plane a rendered class is drawn on; nullopt for classes not drawn.
std::optional<MapPlane> plane_for(CellClass c);

/// Three same-sized binary planes: (neoplastic, connective, non-neoplastic).
/// Displayed as green, red and blue respectively.
struct CellMap {
    int width = 0;
    int height = 0;
    std::array<BinaryPlane, kNumPlanes> planes;

    CellMap() = default;
    CellMap(int w, int h);

    BinaryPlane& plane(MapPlane p) { return planes[static_cast<std::size_t>(p)]; }
    const BinaryPlane& plane(MapPlane p) const { return planes[static_cast<std::size_t>(p)]; }

    friend bool operator==(const CellMap&, const CellMap&) = default;
};

struct TileRecord {
    std::string slide_id;
    int grid_row = 0;
    int grid_col = 0;
    CellMap pixels;
    std::optional<GrowthPattern> label;

    /// `{slide_id}_r{row}_c{col}`; also the PNG file stem.
    std::string tile_id() const;
};

std::string make_tile_id(const std::string& slide_id, int row, int col);

/// Sets every in-bounds pixel within `radius` (inclusive) of the centre
/// rounded half away from zero. Out-of-bounds pixels are clipped.
void stamp_disk(BinaryPlane& plane, MapPoint center, int radius);

/// Rescales each record into map space and stamps it on its class plane.
/// Map size is ceil(slide size * map_mag / detection_mag) from `meta`.
/// Throws DataError for a record whose class is not drawn.
CellMap build_cell_map(std::span<const NucleusRecord> records, const SlideMeta& meta, const RasterConfig& cfg);

/// Regular non-overlapping grid from (0,0), row-major; edge tiles zero-padded.
std::vector<TileRecord> tile_map(const CellMap& map, const RasterConfig& cfg, const std::string& slide_id);

/// Inverse of tile_map for a width x height map (padding dropped).
CellMap stitch_tiles(std::span<const TileRecord> tiles, int width, int height, int tile_size);

/// 8-bit RGB PNG with R = connective, G = neoplastic, B = non-neoplastic (0/255).
std::vector<std::uint8_t> encode_png(const CellMap& map);
std::vector<std::uint8_t> encode_tile_png(const TileRecord& tile);

/// Decodes a PNG written by encode_png. Throws DataError on any channel
/// value other than 0 or 255.
CellMap decode_png(std::span<const std::uint8_t> bytes);

} // namespace cellmap
