// Copyright 2026 The Lightfield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIGHTFIELD_FIELDMAP_HPP
#define LIGHTFIELD_FIELDMAP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "lightfield/error.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/lightmodel.hpp"
#include "lightfield/png.hpp"
#include "lightfield/scenario.hpp"

namespace lightfield {

// Below this distance a query point is treated as sitting on the lamp.
inline constexpr double kCoincidenceM = 1e-6;
inline constexpr double kMaxGridCells = 1e8;

/// Precomputed lamp geometry for repeated field queries. Lamps are held in id
/// order so every reduction sums in the same sequence.
class FieldEvaluator {
 public:
  struct Lamp {
    Vec2 position;
    AttenuationParams params;
  };

  explicit FieldEvaluator(const Scenario& scenario) : frame_(scenario.frame()) {
    for (const LightSource* s : scenario.sorted_sources()) {
      AttenuationParams p = s->params;
      lamps_.push_back({frame_.project(s->position), p});
    }
  }

  FieldEvaluator(LocalFrame frame, std::vector<Lamp> lamps) : frame_(frame), lamps_(std::move(lamps)) {}

  const LocalFrame& frame() const noexcept { return frame_; }
  const std::vector<Lamp>& lamps() const noexcept { return lamps_; }
  bool empty() const noexcept { return lamps_.empty(); }

  /// Inverse-square-distance weighted mean of each lamp's attenuated intensity.
  double at_local(const Vec2& q) const {
    if (lamps_.empty()) throw Error(ErrorCode::NoSources, "field needs at least one light source");
    double num = 0.0, den = 0.0;
    for (const Lamp& lamp : lamps_) {
      const double d = (lamp.position - q).norm();
      if (d < kCoincidenceM) return lamp.params.i0;
      const double w = 1.0 / (d * d);
      num += w * attenuate(d, lamp.params);
      den += w;
    }
    return num / den;
  }

  double at(const GeoPoint& p) const { return at_local(frame_.project_checked(p)); }

 private:
  LocalFrame frame_;
  std::vector<Lamp> lamps_;
};

inline double field_at(const Scenario& scenario, const GeoPoint& p) {
  return FieldEvaluator(scenario).at(p);
}

struct FieldGrid {
  GridSpec spec;
  std::vector<double> values;  // row-major, rows * cols

  double at(std::size_t row, std::size_t col) const { return values[row * spec.cols() + col]; }
  double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

inline GridSpec scenario_grid(const Scenario& scenario, double cell_size_m) {
  if (!scenario.bbox.valid()) throw Error(ErrorCode::InvalidArgument, "scenario bbox is invalid");
  const LocalFrame f(scenario.bbox.center());
  const Vec2 lo = f.project(scenario.bbox.min), hi = f.project(scenario.bbox.max);
  const double cells = std::floor((hi.x - lo.x) / cell_size_m) * std::floor((hi.y - lo.y) / cell_size_m);
  if (cells > kMaxGridCells) {
    throw Error(ErrorCode::GridTooLarge, "grid would have " + std::to_string(cells) + " cells");
  }
  return GridSpec(scenario.bbox, cell_size_m);
}

/// Field sampled at every cell center. A scenario without lamps renders dark.
inline FieldGrid render_grid(const Scenario& scenario, double cell_size_m) {
  FieldGrid grid{scenario_grid(scenario, cell_size_m), {}};
  grid.values.assign(grid.spec.size(), 0.0);
  if (scenario.sources.empty()) return grid;
  const FieldEvaluator field(scenario);
  for (std::size_t r = 0; r < grid.spec.rows(); ++r) {
    for (std::size_t c = 0; c < grid.spec.cols(); ++c) {
      grid.values[r * grid.spec.cols() + c] = field.at(grid.spec.cell_center(r, c));
    }
  }
  return grid;
}

inline FieldGrid render_grid(const Scenario& scenario) { return render_grid(scenario, scenario.cell_size_m); }

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Darkness to brightness, evenly spaced at k/9.
inline constexpr std::array<Rgb, 10> kColorStops{{
    {0, 0, 0},        // black
    {0, 0, 255},      // blue
    {0, 255, 255},    // cyan
    {0, 255, 0},      // lime
    {255, 255, 0},    // yellow
    {255, 165, 0},    // orange
    {255, 0, 0},      // red
    {128, 0, 0},      // maroon
    {128, 0, 128},    // purple
    {255, 255, 255},  // white
}};

inline double color_stop_position(std::size_t k) {
  return static_cast<double>(k) / static_cast<double>(kColorStops.size() - 1);
}

/// Piecewise-linear blend between adjacent stops; n is clamped to [0, 1].
inline Rgb colormap(double n) {
  if (!(n > 0.0)) return kColorStops.front();
  if (n >= 1.0) return kColorStops.back();
  const double scaled = n * static_cast<double>(kColorStops.size() - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(scaled), kColorStops.size() - 2);
  const double t = scaled - static_cast<double>(k);
  const Rgb& a = kColorStops[k];
  const Rgb& b = kColorStops[k + 1];
  auto mix = [t](std::uint8_t x, std::uint8_t y) {
    return static_cast<std::uint8_t>(std::lround(x + t * (static_cast<double>(y) - x)));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

inline Rgb color_for_intensity(double v, double i0_max) {
  return colormap(normalized_brightness(intensity_to_sqm(std::isfinite(v) ? v : 0.0, i0_max)));
}

inline Image colorize(const FieldGrid& grid, double i0_max) {
  if (!(i0_max > 0.0)) throw Error(ErrorCode::NonPositiveScale, "i0_max must be positive");
  Image img(grid.spec.cols(), grid.spec.rows(), 3);
  for (std::size_t r = 0; r < grid.spec.rows(); ++r) {
    for (std::size_t c = 0; c < grid.spec.cols(); ++c) {
      const Rgb rgb = color_for_intensity(grid.at(r, c), i0_max);
      std::uint8_t* px = img.at(c, r);
      px[0] = rgb.r;
      px[1] = rgb.g;
      px[2] = rgb.b;
    }
  }
  return img;
}

// Web-mercator tile addressing.
struct TileId {
  int z = 0;
  long x = 0;
  long y = 0;
};

inline constexpr int kTileSize = 256;
inline constexpr int kMaxZoom = 22;

inline double tile_lon(double x, int z) { return x / std::ldexp(1.0, z) * 360.0 - 180.0; }

inline double tile_lat(double y, int z) {
  const double n = std::numbers::pi * (1.0 - 2.0 * y / std::ldexp(1.0, z));
  return std::atan(std::sinh(n)) * 180.0 / std::numbers::pi;
}

inline GeoBox tile_bounds(const TileId& t) {
  return {{tile_lat(static_cast<double>(t.y + 1), t.z), tile_lon(static_cast<double>(t.x), t.z)},
          {tile_lat(static_cast<double>(t.y), t.z), tile_lon(static_cast<double>(t.x + 1), t.z)}};
}

inline void validate_tile(const TileId& t) {
  if (t.z < 0 || t.z > kMaxZoom) throw Error(ErrorCode::InvalidArgument, "zoom must lie in [0, 22]");
  const long n = 1L << t.z;
  if (t.x < 0 || t.y < 0 || t.x >= n || t.y >= n) {
    throw Error(ErrorCode::InvalidArgument, "tile index outside the zoom level");
  }
}

/// Tile containing `p` at zoom z.
inline TileId tile_for(const GeoPoint& p, int z) {
  const double n = std::ldexp(1.0, z);
  const double lat = p.lat_deg * std::numbers::pi / 180.0;
  const double x = (p.lon_deg + 180.0) / 360.0 * n;
  const double y = (1.0 - std::asinh(std::tan(lat)) / std::numbers::pi) / 2.0 * n;
  const long maxi = static_cast<long>(n) - 1;
  return {z, std::clamp(static_cast<long>(std::floor(x)), 0L, maxi),
          std::clamp(static_cast<long>(std::floor(y)), 0L, maxi)};
}

/// 256x256 RGBA tile. Pixels are colored by the field at their geographic
/// center; pixels outside the scenario bbox stay fully transparent.
inline Image render_tile(const Scenario& scenario, const TileId& tile) {
  validate_tile(tile);
  Image img(kTileSize, kTileSize, 4);
  if (!tile_bounds(tile).intersects(scenario.bbox)) return img;
  const double i0_max = scenario.i0_max();
  const bool dark = scenario.sources.empty();
  const FieldEvaluator field(scenario);
  for (int py = 0; py < kTileSize; ++py) {
    const double lat = tile_lat(static_cast<double>(tile.y) + (py + 0.5) / kTileSize, tile.z);
    if (lat < scenario.bbox.min.lat_deg || lat > scenario.bbox.max.lat_deg) continue;
    for (int px = 0; px < kTileSize; ++px) {
      const double lon = tile_lon(static_cast<double>(tile.x) + (px + 0.5) / kTileSize, tile.z);
      if (lon < scenario.bbox.min.lon_deg || lon > scenario.bbox.max.lon_deg) continue;
      const double v = dark ? 0.0 : field.at(GeoPoint{lat, lon});
      const Rgb rgb = color_for_intensity(v, i0_max);
      std::uint8_t* out = img.at(static_cast<std::size_t>(px), static_cast<std::size_t>(py));
      out[0] = rgb.r;
      out[1] = rgb.g;
      out[2] = rgb.b;
      out[3] = 255;
    }
  }
  return img;
}

struct HotspotRegion {
  std::vector<std::size_t> cells;  // row-major indices, ascending
  GeoPoint centroid;
  std::size_t count() const noexcept { return cells.size(); }
};

/// 4-connected components of cells at least as bright as `threshold_sqm`,
/// largest first.
inline std::vector<HotspotRegion> hotspots(const FieldGrid& grid, double threshold_sqm, double i0_max) {
  if (!std::isfinite(threshold_sqm)) throw Error(ErrorCode::InvalidArgument, "threshold must be finite");
  const std::size_t rows = grid.spec.rows(), cols = grid.spec.cols();
  std::vector<char> hot(grid.values.size(), 0);
  for (std::size_t i = 0; i < hot.size(); ++i) {
    hot[i] = intensity_to_sqm(grid.values[i], i0_max) <= threshold_sqm ? 1 : 0;
  }
  std::vector<char> seen(hot.size(), 0);
  std::vector<HotspotRegion> regions;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < hot.size(); ++start) {
    if (!hot[start] || seen[start]) continue;
    HotspotRegion region;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      region.cells.push_back(i);
      const std::size_t r = i / cols, c = i % cols;
      auto visit = [&](std::size_t j) {
        if (hot[j] && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      };
      if (r > 0) visit(i - cols);
      if (r + 1 < rows) visit(i + cols);
      if (c > 0) visit(i - 1);
      if (c + 1 < cols) visit(i + 1);
    }
    std::sort(region.cells.begin(), region.cells.end());
    Vec2 sum{};
    for (std::size_t i : region.cells) sum = sum + grid.spec.cell_center_local(i / cols, i % cols);
    region.centroid = grid.spec.frame().unproject((1.0 / static_cast<double>(region.cells.size())) * sum);
    regions.push_back(std::move(region));
  }
  std::stable_sort(regions.begin(), regions.end(),
                   [](const HotspotRegion& a, const HotspotRegion& b) { return a.count() > b.count(); });
  return regions;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_FIELDMAP_HPP
