#include "cellmap/raster.hpp"

#include "cellmap/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cellmap {

void RasterConfig::validate() const
{
    if (disk_radius < 0) {
        throw ConfigError("raster: disk_radius must be >= 0");
    }
    if (tile_size <= 0) {
        throw ConfigError("raster: tile_size must be > 0");
    }
    if (!(map_mag > 0.0) || !(detection_mag > map_mag)) {
        throw ConfigError("raster: need detection_mag > map_mag > 0");
    }
}

BinaryPlane::BinaryPlane(int width, int height)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0)
{
    if (width < 0 || height < 0) {
        throw DataError("plane dimensions must be non-negative");
    }
}

std::size_t BinaryPlane::count_set() const
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

std::optional<MapPlane> plane_for(CellClass c)
{
    switch (c) {
    case CellClass::Neoplastic:
        return MapPlane::Neoplastic;
    case CellClass::Connective:
        return MapPlane::Connective;
    case CellClass::NonNeoplasticEpithelial:
        return MapPlane::NonNeoplastic;
    default:
        return std::nullopt;
    }
}

CellMap::CellMap(int w, int h) : width(w), height(h)
{
    for (auto& p : planes) {
        p = BinaryPlane(w, h);
    }
}

std::string make_tile_id(const std::string& slide_id, int row, int col)
{
    return slide_id + "_r" + std::to_string(row) + "_c" + std::to_string(col);
}

std::string TileRecord::tile_id() const
{
    return make_tile_id(slide_id, grid_row, grid_col);
}

void stamp_disk(BinaryPlane& plane, MapPoint center, int radius)
{
    if (radius < 0 || !std::isfinite(center.x) || !std::isfinite(center.y)) {
        return;
    }
    // std::round is half-away-from-zero.
    const double rx = std::round(center.x);
    const double ry = std::round(center.y);
    const double reach = static_cast<double>(radius);
    if (rx + reach < 0.0 || ry + reach < 0.0 || rx - reach >= plane.width() || ry - reach >= plane.height()) {
        return;
    }
    const auto cx = static_cast<std::int64_t>(rx);
    const auto cy = static_cast<std::int64_t>(ry);
    const std::int64_t r = radius;
    const std::int64_t r2 = r * r;
    const std::int64_t y0 = std::max<std::int64_t>(cy - r, 0);
    const std::int64_t y1 = std::min<std::int64_t>(cy + r, plane.height() - 1);
    for (std::int64_t py = y0; py <= y1; ++py) {
        const std::int64_t dy = py - cy;
        // Widest dx with dx^2 <= r^2 - dy^2.
        std::int64_t half = static_cast<std::int64_t>(std::sqrt(static_cast<double>(r2 - dy * dy)));
        while (half * half > r2 - dy * dy) {
            --half;
        }
        while ((half + 1) * (half + 1) <= r2 - dy * dy) {
            ++half;
        }
        const std::int64_t x0 = std::max<std::int64_t>(cx - half, 0);
        const std::int64_t x1 = std::min<std::int64_t>(cx + half, plane.width() - 1);
        for (std::int64_t px = x0; px <= x1; ++px) {
            plane.set(static_cast<int>(px), static_cast<int>(py));
        }
    }
}

CellMap build_cell_map(std::span<const NucleusRecord> records, const SlideMeta& meta, const RasterConfig& cfg)
{
    meta.validate();
    cfg.validate();
    const double s = meta.scale();
    const double w = std::ceil(meta.width_px * s);
    const double h = std::ceil(meta.height_px * s);
    if (w > std::numeric_limits<int>::max() || h > std::numeric_limits<int>::max()) {
        throw DataError("slide '" + meta.slide_id + "': cell map too large");
    }
    CellMap map(static_cast<int>(w), static_cast<int>(h));
    for (const auto& rec : records) {
        const auto p = plane_for(rec.cell_class);
        if (!p) {
            throw DataError("slide '" + meta.slide_id + "': class '" + std::string(to_string(rec.cell_class)) +
                            "' is not drawn in cell maps; filter records first");
        }
        stamp_disk(map.plane(*p), rescale_to_map(rec, meta), cfg.disk_radius);
    }
    return map;
}

std::vector<TileRecord> tile_map(const CellMap& map, const RasterConfig& cfg, const std::string& slide_id)
{
    cfg.validate();
    const int ts = cfg.tile_size;
    const int rows = (map.height + ts - 1) / ts;
    const int cols = (map.width + ts - 1) / ts;
    std::vector<TileRecord> tiles;
    tiles.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            TileRecord t;
            t.slide_id = slide_id;
            t.grid_row = r;
            t.grid_col = c;
            t.pixels = CellMap(ts, ts);
            const int x_end = std::min(ts, map.width - c * ts);
            const int y_end = std::min(ts, map.height - r * ts);
            for (std::size_t p = 0; p < kNumPlanes; ++p) {
                const auto& src = map.planes[p];
                auto& dst = t.pixels.planes[p];
                for (int y = 0; y < y_end; ++y) {
                    for (int x = 0; x < x_end; ++x) {
                        if (src.at(c * ts + x, r * ts + y)) {
                            dst.set(x, y);
                        }
                    }
                }
            }
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

CellMap stitch_tiles(std::span<const TileRecord> tiles, int width, int height, int tile_size)
{
    CellMap map(width, height);
    for (const auto& t : tiles) {
        for (std::size_t p = 0; p < kNumPlanes; ++p) {
            const auto& src = t.pixels.planes[p];
            for (int y = 0; y < tile_size; ++y) {
                const int my = t.grid_row * tile_size + y;
                if (my >= height) {
                    break;
                }
                for (int x = 0; x < tile_size; ++x) {
                    const int mx = t.grid_col * tile_size + x;
                    if (mx >= width) {
                        break;
                    }
                    if (src.at(x, y)) {
                        map.planes[p].set(mx, my);
                    }
                }
            }
        }
    }
    return map;
}

std::vector<std::uint8_t> encode_png(const CellMap& map)
{
    const auto n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
    std::vector<std::uint8_t> rgb(n * 3);
    const auto g = map.plane(MapPlane::Neoplastic).data();
    const auto r = map.plane(MapPlane::Connective).data();
    const auto b = map.plane(MapPlane::NonNeoplastic).data();
    for (std::size_t i = 0; i < n; ++i) {
        rgb[3 * i + 0] = static_cast<std::uint8_t>(255 * r[i]);
        rgb[3 * i + 1] = static_cast<std::uint8_t>(255 * g[i]);
        rgb[3 * i + 2] = static_cast<std::uint8_t>(255 * b[i]);
    }

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(map.width);
    image.height = static_cast<png_uint_32>(map.height);
    image.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("PNG encode failed: " + msg);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("PNG encode failed: " + msg);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> encode_tile_png(const TileRecord& tile)
{
    return encode_png(tile.pixels);
}

CellMap decode_png(std::span<const std::uint8_t> bytes)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw DataError(std::string("PNG decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DataError("PNG decode failed: " + msg);
    }
    CellMap map(static_cast<int>(image.width), static_cast<int>(image.height));
    auto channel = [](std::uint8_t v) {
        if (v != 0 && v != 255) {
            throw DataError("PNG is not a binary cell map (channel value " + std::to_string(v) + ")");
        }
        return v == 255;
    };
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(map.width) +
                                static_cast<std::size_t>(x));
            if (channel(rgb[i + 0])) {
                map.plane(MapPlane::Connective).set(x, y);
            }
            if (channel(rgb[i + 1])) {
                map.plane(MapPlane::Neoplastic).set(x, y);
            }
            if (channel(rgb[i + 2])) {
                map.plane(MapPlane::NonNeoplastic).set(x, y);
            }
        }
    }
    return map;
}

} // namespace cellmap
