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

#ifndef LIGHTFIELD_FOOTPRINT_HPP
#define LIGHTFIELD_FOOTPRINT_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lightfield/error.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/lightmodel.hpp"
#include "lightfield/scenario.hpp"

namespace lightfield {

enum class KernelKind { Attenuation, InverseSquare };

inline constexpr std::string_view kernel_name(KernelKind k) {
  return k == KernelKind::Attenuation ? "attenuation" : "inverse_square";
}

inline KernelKind parse_kernel(std::string_view s) {
  if (s == "attenuation") return KernelKind::Attenuation;
  if (s == "inverse_square") return KernelKind::InverseSquare;
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(s) + "'");
}

/// How one lamp lights one cell. `mount_height_m` is only used by the
/// inverse-square kernel.
struct IlluminanceKernel {
  KernelKind kind = KernelKind::Attenuation;
  double mount_height_m = 10.0;

  void validate() const {
    if (!(mount_height_m > 0.0) || !std::isfinite(mount_height_m)) {
      throw Error(ErrorCode::InvalidArgument, "mount_height_m must be positive");
    }
  }
};

/// Normalized illuminance in [0, 1] at ground distance d from a lamp.
///
/// Attenuation kernel: attenuate(d) / i0_max.
/// Inverse-square kernel: a lamp mounted at height h lights a ground point at
/// slant range rho = sqrt(d^2 + h^2) with incidence cosine h / rho, giving
/// I0 cos(theta) / (4 pi rho^2). Dividing by the under-lamp value I0 / (4 pi h^2)
/// leaves (h / rho)^3.
inline double kernel_value(double d_m, const AttenuationParams& params, const IlluminanceKernel& kernel,
                           double i0_max) {
  if (!(i0_max > 0.0)) throw Error(ErrorCode::NonPositiveScale, "i0_max must be positive");
  if (kernel.kind == KernelKind::Attenuation) {
    return std::clamp(attenuate(d_m, params) / i0_max, 0.0, 1.0);
  }
  const double h = kernel.mount_height_m;
  const double rho = std::hypot(d_m, h);
  const double cos_theta = h / rho;
  const double e = params.i0 * cos_theta / (4.0 * std::numbers::pi * rho * rho);
  const double under_lamp = params.i0 / (4.0 * std::numbers::pi * h * h);
  return std::clamp(e / under_lamp, 0.0, 1.0);
}

inline double cell_illuminance(const LightSource& source, const GeoPoint& cell_center, const IlluminanceKernel& kernel,
                               double i0_max, const LocalFrame& frame) {
  return kernel_value(distance_m(source.position, cell_center, frame), source.params, kernel, i0_max);
}

namespace detail {

struct AreaCells {
  GridSpec grid;
  std::vector<Vec2> centers;  // scenario-frame coordinates
};

inline AreaCells area_cells(const Scenario& scenario, const GeoPolygon& area, double cell_size_m) {
  if (!(cell_size_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell size must be positive");
  AreaCells out{GridSpec(area.bbox(), cell_size_m), {}};
  if (!area.bbox().intersects(scenario.bbox)) return out;
  const LocalFrame frame = scenario.frame();
  for (std::size_t idx : cells_in(area, out.grid)) {
    out.centers.push_back(frame.project_checked(out.grid.cell_center(idx)));
  }
  return out;
}

}  // namespace detail

/// Total normalized illuminance deposited on `area`: the double sum over
/// area cells and lamps, times the cell area.
inline double area_footprint(const Scenario& scenario, const GeoPolygon& area, const IlluminanceKernel& kernel = {},
                             double cell_size_m = 1.0) {
  kernel.validate();
  const auto cells = detail::area_cells(scenario, area, cell_size_m);
  if (scenario.sources.empty() || cells.centers.empty()) return 0.0;
  const double i0_max = scenario.i0_max();
  const LocalFrame frame = scenario.frame();
  const auto order = scenario.sorted_sources();
  std::vector<Vec2> lamps;
  for (const LightSource* s : order) lamps.push_back(frame.project(s->position));
  double total = 0.0;
  for (const Vec2& c : cells.centers) {
    double cell = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      cell += kernel_value((lamps[i] - c).norm(), order[i]->params, kernel, i0_max);
    }
    total += cell;
  }
  return total * cells.grid.cell_area_m2();
}

/// One lamp's share of the area footprint.
inline double source_footprint(const Scenario& scenario, const std::string& source_id, const GeoPolygon& area,
                               const IlluminanceKernel& kernel = {}, double cell_size_m = 1.0) {
  kernel.validate();
  const LightSource& src = scenario.source(source_id);
  const auto cells = detail::area_cells(scenario, area, cell_size_m);
  const double i0_max = scenario.i0_max();
  const Vec2 lamp = scenario.frame().project(src.position);
  double total = 0.0;
  for (const Vec2& c : cells.centers) total += kernel_value((lamp - c).norm(), src.params, kernel, i0_max);
  return total * cells.grid.cell_area_m2();
}

struct FootprintEntry {
  std::string source_id;
  double footprint = 0.0;
};

struct FootprintReport {
  double area_total = 0.0;
  std::vector<FootprintEntry> per_source;  // descending footprint, ties by id
  double cell_size_m = 1.0;
  IlluminanceKernel kernel;
  std::string area_name;
};

/// Per-lamp ledger for an area. area_total is the sum of the ledger rows,
/// which makes the report additive by construction.
inline FootprintReport footprint_report(const Scenario& scenario, const GeoPolygon& area,
                                        const IlluminanceKernel& kernel = {}, double cell_size_m = 1.0) {
  kernel.validate();
  FootprintReport report;
  report.cell_size_m = cell_size_m;
  report.kernel = kernel;
  const auto cells = detail::area_cells(scenario, area, cell_size_m);
  const double i0_max = scenario.i0_max();
  const LocalFrame frame = scenario.frame();
  for (const LightSource* s : scenario.sorted_sources()) {
    const Vec2 lamp = frame.project(s->position);
    double total = 0.0;
    for (const Vec2& c : cells.centers) total += kernel_value((lamp - c).norm(), s->params, kernel, i0_max);
    report.per_source.push_back({s->id, total * cells.grid.cell_area_m2()});
  }
  for (const auto& e : report.per_source) report.area_total += e.footprint;
  std::stable_sort(report.per_source.begin(), report.per_source.end(),
                   [](const FootprintEntry& a, const FootprintEntry& b) { return a.footprint > b.footprint; });
  return report;
}

inline FootprintReport footprint_report(const Scenario& scenario, const std::string& area_name,
                                        const IlluminanceKernel& kernel = {}, double cell_size_m = 1.0) {
  FootprintReport r = footprint_report(scenario, scenario.area(area_name).polygon, kernel, cell_size_m);
  r.area_name = area_name;
  return r;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_FOOTPRINT_HPP
