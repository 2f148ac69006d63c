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

#ifndef LIGHTFIELD_SCENARIO_HPP
#define LIGHTFIELD_SCENARIO_HPP

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "lightfield/error.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/lightmodel.hpp"

namespace lightfield {

struct ProtectedArea {
  std::string name;
  GeoPolygon polygon;

  friend bool operator==(const ProtectedArea&, const ProtectedArea&) = default;
};

inline constexpr double kSourcePaddingM = 1000.0;

/// A named world: lamps, protected polygons and the raster extent.
struct Scenario {
  std::string id;
  std::vector<LightSource> sources;
  std::vector<ProtectedArea> protected_areas;
  GeoBox bbox{};
  double cell_size_m = 10.0;
  double alpha = kDefaultAlpha;

  LocalFrame frame() const { return make_local_frame(bbox.center()); }

  /// Brightest lamp's I0; the SQM/colormap scale. Defaults to the profile I0
  /// when the scenario has no lamps.
  double i0_max() const {
    double m = 0.0;
    for (const auto& s : sources) m = std::max(m, s.params.i0);
    return m > 0.0 ? m : kProfiles.front().params.i0;
  }

  const ProtectedArea& area(const std::string& name) const {
    for (const auto& a : protected_areas) {
      if (a.name == name) return a;
    }
    throw Error(ErrorCode::NotFound, "no protected area named '" + name + "'");
  }

  const LightSource& source(const std::string& source_id) const {
    for (const auto& s : sources) {
      if (s.id == source_id) return s;
    }
    throw Error(ErrorCode::UnknownSource, "no light source with id '" + source_id + "'");
  }

  /// Sources in ascending id order, the fixed summation order for every reduction.
  std::vector<const LightSource*> sorted_sources() const {
    std::vector<const LightSource*> out;
    out.reserve(sources.size());
    for (const auto& s : sources) out.push_back(&s);
    std::sort(out.begin(), out.end(), [](const LightSource* a, const LightSource* b) { return a->id < b->id; });
    return out;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Checks the scenario invariants and throws InvalidArgument on the first violation.
inline void validate(const Scenario& s) {
  if (s.id.empty()) throw Error(ErrorCode::InvalidArgument, "scenario id must not be empty");
  if (!s.bbox.valid()) throw Error(ErrorCode::InvalidArgument, "scenario bbox is invalid");
  if (!(s.cell_size_m > 0.0) || !std::isfinite(s.cell_size_m)) {
    throw Error(ErrorCode::InvalidArgument, "cell_size_m must be positive");
  }
  if (!std::isfinite(s.alpha) || s.alpha < 0.0) throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
  const LocalFrame frame = s.frame();
  const Vec2 lo = frame.project(s.bbox.min), hi = frame.project(s.bbox.max);
  if ((hi - lo).norm() > 2.0 * kFrameValidityRadiusM) {
    throw Error(ErrorCode::InvalidArgument, "scenario bbox exceeds the local frame extent");
  }
  std::set<std::string> ids;
  for (const auto& src : s.sources) {
    if (src.id.empty()) throw Error(ErrorCode::InvalidArgument, "light source id must not be empty");
    if (!ids.insert(src.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate source id '" + src.id + "'");
    if (!src.position.valid()) throw Error(ErrorCode::InvalidArgument, "source '" + src.id + "' position invalid");
    validate(src.params);
    if (src.profile_id) profile(*src.profile_id);
    const Vec2 p = frame.project(src.position);
    if (p.x < lo.x - kSourcePaddingM || p.x > hi.x + kSourcePaddingM || p.y < lo.y - kSourcePaddingM ||
        p.y > hi.y + kSourcePaddingM) {
      throw Error(ErrorCode::InvalidArgument, "source '" + src.id + "' lies outside the padded bbox");
    }
  }
  std::set<std::string> names;
  for (const auto& a : s.protected_areas) {
    if (a.name.empty()) throw Error(ErrorCode::InvalidArgument, "protected area name must not be empty");
    if (!names.insert(a.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate area name '" + a.name + "'");
    if (a.polygon.empty()) throw Error(ErrorCode::DegeneratePolygon, "protected area '" + a.name + "' is empty");
  }
}

}  // namespace lightfield

#endif  // LIGHTFIELD_SCENARIO_HPP
