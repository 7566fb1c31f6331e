#include "cellmap/synth.hpp"

#include "cellmap/csv.hpp"
#include "cellmap/errors.hpp"
#include "cellmap/raster.hpp"
#include "cellmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cellmap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Pattern kernel constants, px at detection magnification.
constexpr double kSolidSpacing = 12.0;        // Poisson-disc radius at density 1
constexpr double kCurveSpacing = 12.0;        // cell pitch along lepidic curves and acinar rings
constexpr double kLepidicCell = 520.0;        // grid pitch of lepidic alveoli
constexpr double kLepidicRadiusMin = 120.0;
constexpr double kLepidicRadiusMax = 240.0;
constexpr double kSeptumOffset = 14.0;        // connective ring just outside an alveolus
constexpr double kSeptumSpacing = 90.0;
constexpr double kTumorSeptumProb = 0.08;     // share of lepidic alveoli with a connective septum
constexpr double kAcinarSpacing = 200.0;      // Poisson-disc radius between gland centres
constexpr double kAcinarRadiusMin = 40.0;
constexpr double kAcinarRadiusMax = 80.0;
constexpr double kStromaSpacing = 45.0;       // connective cells between glands
constexpr double kStromaClearance = 18.0;
constexpr double kStromaPatchSpacing = 600.0; // stroma is patchy: islands between glands
constexpr double kStromaPatchRadius = 160.0;
constexpr double kStromaPatchProb = 0.3;
constexpr double kPapillaRootSpacing = 350.0;
constexpr double kPapillaStep = 20.0;
constexpr double kCoreSpacing = 10.0;         // connective cells along a fibrovascular core
constexpr double kLiningOffset = 14.0;        // neoplastic lining on each side of a core
constexpr double kTuftSpacing = 150.0;
constexpr double kTuftRadiusMin = 18.0;
constexpr double kTuftRadiusMax = 30.0;
constexpr double kTuftMinSeparation = 7.0;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Rect {
    double x0, y0, x1, y1;
};

/// Bridson dart throwing on `area` with fixed iteration order.
std::vector<Point> poisson_disc(Rng& rng, Rect area, double radius, int attempts = 30)
{
    const double cell = radius / std::numbers::sqrt2;
    const int gw = static_cast<int>(std::ceil((area.x1 - area.x0) / cell));
    const int gh = static_cast<int>(std::ceil((area.y1 - area.y0) / cell));
    std::vector<int> grid(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh), -1);
    std::vector<Point> pts;
    std::vector<std::size_t> active;

    auto cell_of = [&](const Point& p) {
        return std::pair{static_cast<int>((p.x - area.x0) / cell), static_cast<int>((p.y - area.y0) / cell)};
    };
    auto fits = [&](const Point& p) {
        if (p.x < area.x0 || p.y < area.y0 || p.x >= area.x1 || p.y >= area.y1) {
            return false;
        }
        const auto [cx, cy] = cell_of(p);
        for (int y = std::max(cy - 2, 0); y <= std::min(cy + 2, gh - 1); ++y) {
            for (int x = std::max(cx - 2, 0); x <= std::min(cx + 2, gw - 1); ++x) {
                const int idx = grid[static_cast<std::size_t>(y) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(x)];
                if (idx >= 0) {
                    const double dx = pts[static_cast<std::size_t>(idx)].x - p.x;
                    const double dy = pts[static_cast<std::size_t>(idx)].y - p.y;
                    if (dx * dx + dy * dy < radius * radius) {
                        return false;
                    }
                }
            }
        }
        return true;
    };
    auto add = [&](const Point& p) {
        const auto [cx, cy] = cell_of(p);
        grid[static_cast<std::size_t>(cy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(cx)] =
            static_cast<int>(pts.size());
        active.push_back(pts.size());
        pts.push_back(p);
    };

    add({rng.uniform(area.x0, area.x1), rng.uniform(area.y0, area.y1)});
    while (!active.empty()) {
        const auto slot = static_cast<std::size_t>(rng.below(active.size()));
        const Point base = pts[active[slot]];
        bool placed = false;
        for (int a = 0; a < attempts; ++a) {
            const double ang = rng.uniform(0.0, kTwoPi);
            const double dist = radius * (1.0 + rng.uniform());
            const Point cand{base.x + dist * std::cos(ang), base.y + dist * std::sin(ang)};
            if (fits(cand)) {
                add(cand);
                placed = true;
                break;
            }
        }
        if (!placed) {
            active[slot] = active.back();
            active.pop_back();
        }
    }
    return pts;
}

/// Places cells on the slide: rotation about the slide centre (structured
/// layouts only), Gaussian jitter, then clipping to the extent.
class Canvas {
public:
    Canvas(const SynthSlideConfig& cfg, const SynthStyle& style, Rng& rng, std::vector<NucleusRecord>& out)
        : w_(cfg.width), h_(cfg.height), style_(style), rng_(rng), out_(out),
          cos_(std::cos(style.rotation)), sin_(std::sin(style.rotation))
    {
    }

    /// Square in layout space whose rotation covers the whole extent.
    Rect layout_area() const
    {
        const double half = 0.5 * std::hypot(w_, h_) + 64.0;
        return {0.5 * w_ - half, 0.5 * h_ - half, 0.5 * w_ + half, 0.5 * h_ + half};
    }

    Rect extent() const { return {0.0, 0.0, w_, h_}; }

    void place(Point p, CellClass cls, bool rotate)
    {
        if (rotate) {
            const double dx = p.x - 0.5 * w_;
            const double dy = p.y - 0.5 * h_;
            p = {0.5 * w_ + cos_ * dx - sin_ * dy, 0.5 * h_ + sin_ * dx + cos_ * dy};
        }
        p.x += rng_.normal(0.0, style_.jitter_sigma);
        p.y += rng_.normal(0.0, style_.jitter_sigma);
        if (p.x >= 0.0 && p.y >= 0.0 && p.x < w_ && p.y < h_) {
            out_.push_back({p.x, p.y, cls, std::nullopt});
        }
    }

    /// Evenly spaced cells on a circle with a random phase.
    void ring(Point c, double radius, double spacing, CellClass cls)
    {
        const int n = std::max(3, static_cast<int>(kTwoPi * radius / spacing));
        const double phase = rng_.uniform(0.0, kTwoPi);
        for (int i = 0; i < n; ++i) {
            const double a = phase + kTwoPi * i / n;
            place({c.x + radius * std::cos(a), c.y + radius * std::sin(a)}, cls, true);
        }
    }

private:
    double w_;
    double h_;
    SynthStyle style_;
    Rng& rng_;
    std::vector<NucleusRecord>& out_;
    double cos_;
    double sin_;
};

void alveoli(Canvas& canvas, Rng& rng, const SynthStyle& style, CellClass lining, double septum_prob)
{
    const Rect area = canvas.layout_area();
    const double pitch = kCurveSpacing / style.density;
    const double cell = kLepidicCell * style.structure_scale;
    for (double y = area.y0; y < area.y1; y += cell) {
        for (double x = area.x0; x < area.x1; x += cell) {
            const Point c{x + 0.5 * cell + rng.uniform(-40.0, 40.0), y + 0.5 * cell + rng.uniform(-40.0, 40.0)};
            const double r = style.structure_scale * rng.uniform(kLepidicRadiusMin, kLepidicRadiusMax);
            canvas.ring(c, r, pitch, lining);
            if (rng.uniform() < septum_prob) {
                canvas.ring(c, r + kSeptumOffset, kSeptumSpacing / style.stroma, CellClass::Connective);
            }
        }
    }
}

void solid(Canvas& canvas, Rng& rng, const SynthStyle& style)
{
    for (const auto& p : poisson_disc(rng, canvas.extent(), kSolidSpacing / std::sqrt(style.density))) {
        canvas.place(p, CellClass::Neoplastic, false);
    }
}

void acinar(Canvas& canvas, Rng& rng, const SynthStyle& style)
{
    const Rect area = canvas.layout_area();
    const auto centres = poisson_disc(rng, area, kAcinarSpacing * style.structure_scale);
    std::vector<double> radii;
    radii.reserve(centres.size());
    for (const auto& c : centres) {
        radii.push_back(style.structure_scale * rng.uniform(kAcinarRadiusMin, kAcinarRadiusMax));
        canvas.ring(c, radii.back(), kCurveSpacing / style.density, CellClass::Neoplastic);
    }
    // Stroma: connective cells inside active islands, kept clear of every gland.
    std::vector<Point> islands;
    for (const auto& p : poisson_disc(rng, area, kStromaPatchSpacing * style.structure_scale)) {
        if (rng.uniform() < kStromaPatchProb) {
            islands.push_back(p);
        }
    }
    const double island_r = kStromaPatchRadius * style.structure_scale;
    const double reach = kAcinarRadiusMax * style.structure_scale + kStromaClearance;
    for (const auto& p : poisson_disc(rng, area, kStromaSpacing / std::sqrt(style.density * style.stroma))) {
        const bool in_island = std::any_of(islands.begin(), islands.end(), [&](const Point& q) {
            return std::hypot(p.x - q.x, p.y - q.y) < island_r;
        });
        bool clear = in_island;
        for (std::size_t i = 0; i < centres.size() && clear; ++i) {
            const double dx = p.x - centres[i].x;
            const double dy = p.y - centres[i].y;
            if (std::abs(dx) < reach && std::abs(dy) < reach) {
                clear = std::hypot(dx, dy) > radii[i] + kStromaClearance;
            }
        }
        if (clear) {
            canvas.place(p, CellClass::Connective, true);
        }
    }
}

void frond(Canvas& canvas, Rng& rng, const SynthStyle& style, Point start, double heading, double length, int depth)
{
    const double pitch = kCurveSpacing / style.density;
    const double core_pitch = kCoreSpacing / style.stroma;
    double core_carry = 0.0;
    double lining_carry = 0.0;
    Point p = start;
    for (double walked = 0.0; walked < length; walked += kPapillaStep) {
        heading += rng.normal(0.0, 0.25);
        const Point dir{std::cos(heading), std::sin(heading)};
        const Point normal{-dir.y, dir.x};
        for (core_carry += kPapillaStep; core_carry >= core_pitch; core_carry -= core_pitch) {
            const double t = kPapillaStep - core_carry;
            canvas.place({p.x + t * dir.x, p.y + t * dir.y}, CellClass::Connective, true);
        }
        for (lining_carry += kPapillaStep; lining_carry >= pitch; lining_carry -= pitch) {
            const double t = kPapillaStep - lining_carry;
            const Point q{p.x + t * dir.x, p.y + t * dir.y};
            canvas.place({q.x + kLiningOffset * normal.x, q.y + kLiningOffset * normal.y}, CellClass::Neoplastic, true);
            canvas.place({q.x - kLiningOffset * normal.x, q.y - kLiningOffset * normal.y}, CellClass::Neoplastic, true);
        }
        p = {p.x + kPapillaStep * dir.x, p.y + kPapillaStep * dir.y};
        if (depth < 2 && rng.uniform() < 0.04) {
            const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
            frond(canvas, rng, style, p, heading + side * rng.uniform(0.5, 1.1), 0.5 * (length - walked), depth + 1);
        }
    }
}

void papillary(Canvas& canvas, Rng& rng, const SynthStyle& style)
{
    for (const auto& root : poisson_disc(rng, canvas.layout_area(), kPapillaRootSpacing * style.structure_scale)) {
        const double length = style.structure_scale * rng.uniform(300.0, 600.0);
        frond(canvas, rng, style, root, rng.uniform(0.0, kTwoPi), length, 0);
    }
}

void micropapillary(Canvas& canvas, Rng& rng, const SynthStyle& style)
{
    const double spacing = kTuftSpacing * style.structure_scale / std::sqrt(style.density);
    for (const auto& c : poisson_disc(rng, canvas.extent(), spacing)) {
        const auto n = 5 + static_cast<int>(rng.below(6));
        const double radius = rng.uniform(kTuftRadiusMin, kTuftRadiusMax);
        std::vector<Point> tuft;
        for (int attempt = 0; attempt < 200 && static_cast<int>(tuft.size()) < n; ++attempt) {
            const double a = rng.uniform(0.0, kTwoPi);
            const double r = radius * std::sqrt(rng.uniform());
            const Point p{c.x + r * std::cos(a), c.y + r * std::sin(a)};
            const bool ok = std::all_of(tuft.begin(), tuft.end(), [&](const Point& q) {
                return std::hypot(p.x - q.x, p.y - q.y) >= kTuftMinSeparation;
            });
            if (ok) {
                tuft.push_back(p);
            }
        }
        for (const auto& p : tuft) {
            canvas.place(p, CellClass::Neoplastic, false);
        }
    }
}

void inflammation(Canvas& canvas, Rng& rng, const SynthStyle& style, double w, double h)
{
    const auto n = static_cast<std::size_t>(std::llround(style.inflammatory_rate * w * h));
    for (std::size_t i = 0; i < n; ++i) {
        canvas.place({rng.uniform(0.0, w), rng.uniform(0.0, h)}, CellClass::Inflammatory, false);
    }
}

} // namespace

SynthStyle draw_style(std::uint64_t slide_seed, double inflammatory_mean)
{
    Rng rng(derive_seed(slide_seed, {0x5757'4c45}));
    SynthStyle s;
    s.density = rng.uniform(0.7, 1.3);
    s.rotation = rng.uniform(0.0, kTwoPi);
    s.jitter_sigma = rng.uniform(0.5, 3.0);
    s.inflammatory_rate = inflammatory_mean * rng.uniform(0.25, 1.75);
    s.structure_scale = rng.uniform(0.65, 1.5);
    s.stroma = rng.uniform(0.35, 1.65);
    return s;
}

SynthSlide generate_slide(const SynthSlideConfig& cfg)
{
    if (!(cfg.tile_footprint > 0.0) || cfg.width < cfg.tile_footprint || cfg.height < cfg.tile_footprint) {
        throw DataError("synth: extent " + csv::format_double(cfg.width) + "x" + csv::format_double(cfg.height) +
                        " is smaller than one tile footprint");
    }
    SynthSlide slide;
    slide.meta = {cfg.slide_id, cfg.width, cfg.height, cfg.detection_mag, cfg.map_mag};
    slide.meta.validate();
    slide.pattern = cfg.pattern;
    slide.style = cfg.style.value_or(draw_style(cfg.slide_seed, cfg.inflammatory_mean));
    if (!(slide.style.density > 0.0) || !(slide.style.structure_scale > 0.0) || !(slide.style.stroma > 0.0) ||
        slide.style.jitter_sigma < 0.0 || slide.style.inflammatory_rate < 0.0) {
        throw DataError("synth: invalid style parameters");
    }

    Rng rng(derive_seed(cfg.slide_seed, {index_of(cfg.pattern)}));
    Canvas canvas(cfg, slide.style, rng, slide.records);
    switch (cfg.pattern) {
    case GrowthPattern::Solid:
        solid(canvas, rng, slide.style);
        break;
    case GrowthPattern::Lepidic:
        alveoli(canvas, rng, slide.style, CellClass::Neoplastic, kTumorSeptumProb);
        break;
    case GrowthPattern::NonTumor:
        alveoli(canvas, rng, slide.style, CellClass::NonNeoplasticEpithelial, 1.0);
        break;
    case GrowthPattern::Acinar:
        acinar(canvas, rng, slide.style);
        break;
    case GrowthPattern::Papillary:
        papillary(canvas, rng, slide.style);
        break;
    case GrowthPattern::Micropapillary:
        micropapillary(canvas, rng, slide.style);
        break;
    }
    inflammation(canvas, rng, slide.style, cfg.width, cfg.height);

    const int rows = static_cast<int>(std::ceil(cfg.height / cfg.tile_footprint));
    const int cols = static_cast<int>(std::ceil(cfg.width / cfg.tile_footprint));
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            slide.tiles.push_back({r, c, cfg.pattern});
        }
    }
    return slide;
}

Cohort generate_cohort(const CohortConfig& cfg)
{
    if (cfg.per_class == 0) {
        throw ConfigError("synth: per_class must be >= 1");
    }
    Cohort cohort;
    for (const auto pattern : kAllPatterns) {
        for (std::size_t i = 0; i < cfg.per_class; ++i) {
            SynthSlideConfig sc;
            sc.slide_id = "synth_" + std::string(to_string(pattern)) + "_" + std::to_string(i);
            sc.pattern = pattern;
            sc.slide_seed = derive_seed(cfg.base_seed, {index_of(pattern), i});
            sc.width = cfg.width;
            sc.height = cfg.height;
            sc.detection_mag = cfg.detection_mag;
            sc.map_mag = cfg.map_mag;
            sc.tile_footprint = cfg.tile_footprint;
            sc.inflammatory_mean = cfg.inflammatory_mean;
            auto slide = generate_slide(sc);
            for (const auto& t : slide.tiles) {
                cohort.manifest.push_back({make_tile_id(sc.slide_id, t.row, t.col), sc.slide_id, t.label});
            }
            cohort.slides.push_back(std::move(slide));
        }
    }
    return cohort;
}

std::array<std::size_t, kNumPatterns> write_cohort(const Cohort& cohort, const std::filesystem::path& dir)
{
    const auto table = ClassCodeTable::pannuke();
    std::vector<SlideEntry> entries;
    for (const auto& s : cohort.slides) {
        const std::string rel = "slides/" + s.meta.slide_id + ".json";
        csv::write_file(dir / rel, emit_nuclei_json(s.records, s.meta.detection_mag, table));
        entries.push_back({s.meta, rel, s.pattern});
    }
    csv::write_file(dir / "slides.csv", slides_to_csv(entries));
    csv::write_file(dir / "manifest.csv", manifest_to_csv(cohort.manifest));

    std::array<std::size_t, kNumPatterns> counts{};
    for (const auto& t : cohort.manifest) {
        ++counts[index_of(t.label)];
    }
    return counts;
}

std::string slides_to_csv(std::span<const SlideEntry> slides)
{
    csv::Table t;
    t.header = {"slide_id", "json", "width", "height", "detection_mag", "map_mag", "pattern"};
    for (const auto& s : slides) {
        t.rows.push_back({s.meta.slide_id, s.json_path, csv::format_double(s.meta.width_px),
                          csv::format_double(s.meta.height_px), csv::format_double(s.meta.detection_mag),
                          csv::format_double(s.meta.map_mag),
                          s.pattern ? std::string(to_string(*s.pattern)) : std::string()});
    }
    return csv::to_string(t);
}

std::vector<SlideEntry> slides_from_csv(std::string_view text, std::string_view origin)
{
    const auto t = csv::parse(text, origin);
    const auto ci = t.column("slide_id");
    const auto cj = t.column("json");
    const auto cw = t.column("width");
    const auto ch = t.column("height");
    const auto cd = t.column("detection_mag");
    const auto cm = t.column("map_mag");
    const auto cp = t.column("pattern");
    std::vector<SlideEntry> out;
    for (const auto& row : t.rows) {
        SlideEntry e;
        e.meta = {row[ci], csv::parse_double(row[cw]), csv::parse_double(row[ch]), csv::parse_double(row[cd]),
                  csv::parse_double(row[cm])};
        e.meta.validate();
        e.json_path = row[cj];
        if (!row[cp].empty()) {
            e.pattern = parse_growth_pattern(row[cp]);
            if (!e.pattern) {
                throw DataError(std::string(origin) + ": unknown pattern '" + row[cp] + "'");
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace cellmap
