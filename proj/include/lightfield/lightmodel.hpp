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

#ifndef LIGHTFIELD_LIGHTMODEL_HPP
#define LIGHTFIELD_LIGHTMODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "lightfield/error.hpp"
#include "lightfield/geo.hpp"

namespace lightfield {

inline constexpr double kDefaultAlpha = 0.1;  // per meter
inline constexpr double kSqmBrightest = 16.0;
inline constexpr double kSqmDarkest = 22.0;
inline constexpr double kSqmSpan = kSqmDarkest - kSqmBrightest;

/// Quadratic-denominator falloff: I(d) = i0 / (1 + c1*(alpha*d) + c2*(alpha*d)^2).
struct AttenuationParams {
  double i0 = 16.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double alpha = kDefaultAlpha;

  bool valid() const noexcept {
    return std::isfinite(i0) && i0 > 0.0 && std::isfinite(c1) && c1 >= 0.0 && std::isfinite(c2) &&
           c2 >= 0.0 && std::isfinite(alpha) && alpha >= 0.0;
  }
  /// c1 = c2 = 0 is legal but the lamp then never dims.
  bool non_attenuating() const noexcept { return c1 == 0.0 && c2 == 0.0; }

  friend bool operator==(const AttenuationParams&, const AttenuationParams&) = default;
};

inline void validate(const AttenuationParams& p) {
  if (!p.valid()) {
    throw Error(ErrorCode::InvalidArgument,
                "attenuation params need i0 > 0 and finite non-negative c1, c2, alpha");
  }
}

/// Denominator of the attenuation law at scaled distance y = alpha*d.
inline double attenuation_denominator(double c1, double c2, double y) noexcept {
  return 1.0 + c1 * y + c2 * y * y;
}

inline double attenuate(double d_m, const AttenuationParams& p) {
  if (!std::isfinite(d_m)) throw Error(ErrorCode::InvalidArgument, "distance must be finite");
  if (d_m < 0.0) throw Error(ErrorCode::NegativeDistance, "distance must be >= 0");
  const double y = p.alpha * d_m;
  return p.i0 / attenuation_denominator(p.c1, p.c2, y);
}

/// Linear intensity to sky brightness: i0_max maps to 16 (bright), 0 to 22 (dark).
inline double intensity_to_sqm(double v, double i0_max) {
  if (!(i0_max > 0.0)) throw Error(ErrorCode::NonPositiveScale, "i0_max must be positive");
  const double ratio = std::clamp(v / i0_max, 0.0, 1.0);
  return kSqmDarkest - kSqmSpan * ratio;
}

inline double normalized_brightness(double sqm) {
  if (std::isnan(sqm)) return 0.0;
  return std::clamp((kSqmDarkest - sqm) / kSqmSpan, 0.0, 1.0);
}

struct LightProfile {
  int id;
  std::string_view road_type;
  AttenuationParams params;
};

// Road-type profiles. Each row is (id, road type, I0, c1, c2).
inline constexpr std::array<LightProfile, 5> kProfiles{{
    {1, "High-speed Roads", {16.0, 0.01, 0.03, kDefaultAlpha}},
    {2, "State Roads", {16.0, 0.03, 0.03, kDefaultAlpha}},
    {3, "County Roads", {16.0, 0.06, 0.03, kDefaultAlpha}},
    {4, "Municipal Roads", {16.0, 0.10, 0.03, kDefaultAlpha}},
    {5, "Parkways/Rural Roads", {16.0, 0.90, 0.60, kDefaultAlpha}},
}};

inline const LightProfile& profile(int id) {
  if (id < 1 || id > static_cast<int>(kProfiles.size())) {
    throw Error(ErrorCode::UnknownProfile, "no lighting profile with id " + std::to_string(id));
  }
  return kProfiles[static_cast<std::size_t>(id - 1)];
}

/// Params of profile `id`, with alpha overridden to the caller's grid scale.
inline AttenuationParams profile_params(int id, double alpha = kDefaultAlpha) {
  AttenuationParams p = profile(id).params;
  p.alpha = alpha;
  return p;
}

struct LightSource {
  std::string id;
  GeoPoint position;
  AttenuationParams params;
  std::optional<int> profile_id;

  /// True when profile_id is absent or the params still match that profile row.
  bool profile_consistent() const {
    if (!profile_id) return true;
    const auto& row = profile(*profile_id).params;
    return row.i0 == params.i0 && row.c1 == params.c1 && row.c2 == params.c2;
  }

  friend bool operator==(const LightSource&, const LightSource&) = default;
};

inline LightSource make_source(std::string id, GeoPoint position, int profile_id,
                               double alpha = kDefaultAlpha) {
  return LightSource{std::move(id), position, profile_params(profile_id, alpha), profile_id};
}

}  // namespace lightfield

#endif  // LIGHTFIELD_LIGHTMODEL_HPP
