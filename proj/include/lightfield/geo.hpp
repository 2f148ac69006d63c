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

#ifndef LIGHTFIELD_GEO_HPP
#define LIGHTFIELD_GEO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lightfield/error.hpp"

namespace lightfield {

struct GeoPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;

  bool valid() const noexcept {
    return std::isfinite(lat_deg) && std::isfinite(lon_deg) && lat_deg >= -90.0 &&
           lat_deg <= 90.0 && lon_deg >= -180.0 && lon_deg <= 180.0;
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline GeoPoint checked_point(double lat_deg, double lon_deg) {
  GeoPoint p{lat_deg, lon_deg};
  if (!p.valid()) {
    throw Error(ErrorCode::InvalidArgument,
                "coordinate out of range: (" + std::to_string(lat_deg) + ", " +
                    std::to_string(lon_deg) + ")");
  }
  return p;
}

/// Planar offset in meters inside a LocalFrame; x grows east, y grows north.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

// WGS-84 equatorial radius; one degree of latitude is ~111.32 km.
inline constexpr double kEarthRadiusM = 6378137.0;
inline constexpr double kMetersPerDegLat = kEarthRadiusM * std::numbers::pi / 180.0;
inline constexpr double kFrameValidityRadiusM = 100'000.0;

/// Equirectangular projection tangent at `origin`. Adequate for the
/// sub-kilometer geometry of street lighting; refuses points more than
/// kFrameValidityRadiusM away from the origin.
class LocalFrame {
 public:
  LocalFrame() : LocalFrame(GeoPoint{0.0, 0.0}) {}

  explicit LocalFrame(GeoPoint origin)
      : origin_(origin),
        meters_per_deg_lat_(kMetersPerDegLat),
        meters_per_deg_lon_(kMetersPerDegLat * std::cos(origin.lat_deg * std::numbers::pi / 180.0)) {}

  const GeoPoint& origin() const noexcept { return origin_; }
  double meters_per_deg_lat() const noexcept { return meters_per_deg_lat_; }
  double meters_per_deg_lon() const noexcept { return meters_per_deg_lon_; }

  Vec2 project(const GeoPoint& p) const noexcept {
    double dlon = p.lon_deg - origin_.lon_deg;
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    return {dlon * meters_per_deg_lon_, (p.lat_deg - origin_.lat_deg) * meters_per_deg_lat_};
  }

  GeoPoint unproject(const Vec2& v) const noexcept {
    double lon = origin_.lon_deg + v.x / meters_per_deg_lon_;
    if (lon > 180.0) lon -= 360.0;
    if (lon < -180.0) lon += 360.0;
    return {origin_.lat_deg + v.y / meters_per_deg_lat_, lon};
  }

  bool in_frame(const GeoPoint& p) const noexcept {
    return p.valid() && project(p).norm() <= kFrameValidityRadiusM;
  }

  /// Projects and throws OutOfFrame if the point lies beyond the validity radius.
  Vec2 project_checked(const GeoPoint& p) const {
    if (!in_frame(p)) {
      throw Error(ErrorCode::OutOfFrame, "point (" + std::to_string(p.lat_deg) + ", " +
                                             std::to_string(p.lon_deg) +
                                             ") outside local frame validity radius");
    }
    return project(p);
  }

 private:
  GeoPoint origin_;
  double meters_per_deg_lat_;
  double meters_per_deg_lon_;
};

inline LocalFrame make_local_frame(const GeoPoint& origin) {
  if (!origin.valid() || std::abs(origin.lat_deg) >= 89.0) {
    throw Error(ErrorCode::PolarLatitude,
                "frame origin latitude must satisfy |lat| < 89, got " + std::to_string(origin.lat_deg));
  }
  return LocalFrame(origin);
}

inline double distance_m(const GeoPoint& a, const GeoPoint& b, const LocalFrame& frame) {
  return (frame.project_checked(a) - frame.project_checked(b)).norm();
}

struct GeoBox {
  GeoPoint min;
  GeoPoint max;

  GeoPoint center() const {
    return {0.5 * (min.lat_deg + max.lat_deg), 0.5 * (min.lon_deg + max.lon_deg)};
  }
  bool contains(const GeoPoint& p) const {
    return p.lat_deg >= min.lat_deg && p.lat_deg <= max.lat_deg && p.lon_deg >= min.lon_deg &&
           p.lon_deg <= max.lon_deg;
  }
  bool intersects(const GeoBox& o) const {
    return !(o.max.lat_deg < min.lat_deg || o.min.lat_deg > max.lat_deg ||
             o.max.lon_deg < min.lon_deg || o.min.lon_deg > max.lon_deg);
  }
  bool valid() const {
    return min.valid() && max.valid() && min.lat_deg < max.lat_deg && min.lon_deg < max.lon_deg;
  }

  friend bool operator==(const GeoBox&, const GeoBox&) = default;
};

namespace detail {

inline double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Orientation of c relative to segment ab, with a relative epsilon.
inline int orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
  double v = cross(b.lon_deg - a.lon_deg, b.lat_deg - a.lat_deg, c.lon_deg - a.lon_deg,
                   c.lat_deg - a.lat_deg);
  constexpr double eps = 1e-18;
  return v > eps ? 1 : (v < -eps ? -1 : 0);
}

inline bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
  if (orient(a, b, p) != 0) return false;
  return p.lon_deg >= std::min(a.lon_deg, b.lon_deg) && p.lon_deg <= std::max(a.lon_deg, b.lon_deg) &&
         p.lat_deg >= std::min(a.lat_deg, b.lat_deg) && p.lat_deg <= std::max(a.lat_deg, b.lat_deg);
}

inline bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c,
                               const GeoPoint& d) {
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
         (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

}  // namespace detail

/// Simple closed ring (no holes). The stored ring always repeats the first
/// vertex at the end.
class GeoPolygon {
 public:
  GeoPolygon() = default;

  explicit GeoPolygon(std::vector<GeoPoint> ring) : ring_(std::move(ring)) {
    for (const auto& p : ring_) {
      if (!p.valid()) throw Error(ErrorCode::InvalidArgument, "polygon vertex out of range");
    }
    if (!ring_.empty() && ring_.front() != ring_.back()) ring_.push_back(ring_.front());
    std::vector<GeoPoint> distinct(ring_.begin(), ring_.end() - (ring_.empty() ? 0 : 1));
    std::sort(distinct.begin(), distinct.end(), [](const GeoPoint& a, const GeoPoint& b) {
      return a.lat_deg < b.lat_deg || (a.lat_deg == b.lat_deg && a.lon_deg < b.lon_deg);
    });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) {
      throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 distinct vertices");
    }
    check_simple();
    bbox_ = GeoBox{ring_.front(), ring_.front()};
    for (const auto& p : ring_) {
      bbox_.min.lat_deg = std::min(bbox_.min.lat_deg, p.lat_deg);
      bbox_.min.lon_deg = std::min(bbox_.min.lon_deg, p.lon_deg);
      bbox_.max.lat_deg = std::max(bbox_.max.lat_deg, p.lat_deg);
      bbox_.max.lon_deg = std::max(bbox_.max.lon_deg, p.lon_deg);
    }
  }

  const std::vector<GeoPoint>& ring() const noexcept { return ring_; }
  const GeoBox& bbox() const noexcept { return bbox_; }
  bool empty() const noexcept { return ring_.empty(); }

  friend bool operator==(const GeoPolygon& a, const GeoPolygon& b) { return a.ring_ == b.ring_; }

 private:
  void check_simple() const {
    const std::size_t n = ring_.size() - 1;  // number of edges
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
        if (adjacent) continue;
        if (detail::segments_intersect(ring_[i], ring_[i + 1], ring_[j], ring_[j + 1])) {
          throw Error(ErrorCode::DegeneratePolygon,
                      "polygon ring self-intersects at edges " + std::to_string(i) + " and " +
                          std::to_string(j));
        }
      }
    }
  }

  std::vector<GeoPoint> ring_;
  GeoBox bbox_{};
};

/// Even-odd ray casting in lon/lat space. Points on an edge or vertex count
/// as inside.
inline bool contains(const GeoPolygon& poly, const GeoPoint& p) {
  if (poly.empty()) throw Error(ErrorCode::DegeneratePolygon, "empty polygon");
  if (!poly.bbox().contains(p)) return false;
  const auto& r = poly.ring();
  bool inside = false;
  for (std::size_t i = 0, n = r.size() - 1; i < n; ++i) {
    const GeoPoint& a = r[i];
    const GeoPoint& b = r[i + 1];
    if (detail::on_segment(a, b, p)) return true;
    if ((a.lat_deg > p.lat_deg) != (b.lat_deg > p.lat_deg)) {
      double x = a.lon_deg + (p.lat_deg - a.lat_deg) * (b.lon_deg - a.lon_deg) / (b.lat_deg - a.lat_deg);
      if (p.lon_deg < x) inside = !inside;
    }
  }
  return inside;
}

/// Raster over a lat/lon box with square cells of `cell_size_m`. Row 0 is the
/// northern edge; cells are addressed row-major. The cell lattice is centered
/// in the box so every cell center lies inside it.
class GridSpec {
 public:
  GridSpec() = default;

  GridSpec(GeoBox bbox, double cell_size_m) : bbox_(bbox), cell_size_m_(cell_size_m) {
    if (!bbox.valid()) throw Error(ErrorCode::InvalidArgument, "grid bbox is empty or invalid");
    if (!(cell_size_m > 0.0) || !std::isfinite(cell_size_m)) {
      throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
    }
    frame_ = make_local_frame(bbox.center());
    Vec2 lo = frame_.project(bbox.min);
    Vec2 hi = frame_.project(bbox.max);
    width_m_ = hi.x - lo.x;
    height_m_ = hi.y - lo.y;
    double cols = std::max(1.0, std::floor(width_m_ / cell_size_m + 1e-9));
    double rows = std::max(1.0, std::floor(height_m_ / cell_size_m + 1e-9));
    if (cols * rows > 4e9) throw Error(ErrorCode::GridTooLarge, "grid exceeds addressable size");
    cols_ = static_cast<std::size_t>(cols);
    rows_ = static_cast<std::size_t>(rows);
    x0_ = -0.5 * cols * cell_size_m;
    y0_ = 0.5 * rows * cell_size_m;
  }

  const GeoBox& bbox() const noexcept { return bbox_; }
  double cell_size_m() const noexcept { return cell_size_m_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }
  const LocalFrame& frame() const noexcept { return frame_; }
  double cell_area_m2() const noexcept { return cell_size_m_ * cell_size_m_; }

  Vec2 cell_center_local(std::size_t row, std::size_t col) const noexcept {
    return {x0_ + (static_cast<double>(col) + 0.5) * cell_size_m_,
            y0_ - (static_cast<double>(row) + 0.5) * cell_size_m_};
  }
  GeoPoint cell_center(std::size_t row, std::size_t col) const noexcept {
    return frame_.unproject(cell_center_local(row, col));
  }
  GeoPoint cell_center(std::size_t index) const noexcept {
    return cell_center(index / cols_, index % cols_);
  }

  /// Cell containing `p`, if any.
  std::optional<std::size_t> cell_of(const GeoPoint& p) const {
    Vec2 v = frame_.project(p);
    double c = std::floor((v.x - x0_) / cell_size_m_);
    double r = std::floor((y0_ - v.y) / cell_size_m_);
    if (c < 0 || r < 0 || c >= static_cast<double>(cols_) || r >= static_cast<double>(rows_)) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(r) * cols_ + static_cast<std::size_t>(c);
  }

 private:
  GeoBox bbox_{};
  double cell_size_m_ = 1.0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  LocalFrame frame_{};
  double width_m_ = 0.0;
  double height_m_ = 0.0;
  double x0_ = 0.0;  // west edge of the lattice
  double y0_ = 0.0;  // north edge of the lattice
};

/// Cells whose centers fall inside `poly`, in row-major order. Returns an
/// empty list when the polygon misses the grid.
inline std::vector<std::size_t> cells_in(const GeoPolygon& poly, const GridSpec& grid) {
  std::vector<std::size_t> out;
  if (poly.empty()) throw Error(ErrorCode::DegeneratePolygon, "empty polygon");
  if (!poly.bbox().intersects(grid.bbox())) return out;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    GeoPoint row_probe = grid.cell_center(r, 0);
    if (row_probe.lat_deg < poly.bbox().min.lat_deg || row_probe.lat_deg > poly.bbox().max.lat_deg) {
      continue;
    }
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (contains(poly, grid.cell_center(r, c))) out.push_back(r * grid.cols() + c);
    }
  }
  return out;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_GEO_HPP
