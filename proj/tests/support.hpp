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

#ifndef LIGHTFIELD_TESTS_SUPPORT_HPP
#define LIGHTFIELD_TESTS_SUPPORT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lightfield/footprint.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/lightmodel.hpp"
#include "lightfield/optimizer.hpp"
#include "lightfield/scenario.hpp"

namespace lftest {

using namespace lightfield;

// Independent oracles. None of these call into the library's geometry or
// field code; they restate the definitions from scratch.

/// Great-circle distance on a sphere of the WGS84 equatorial radius.
inline double haversine_m(GeoPoint a, GeoPoint b) {
  constexpr double r = 6378137.0;
  const double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat_deg - a.lat_deg) * rad, dlon = (b.lon_deg - a.lon_deg) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat_deg * rad) * std::cos(b.lat_deg * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * r * std::asin(std::min(1.0, std::sqrt(h)));
}

/// I0 / (1 + c1 a d + c2 (a d)^2), written out term by term.
inline double attenuation_oracle(double d, double i0, double c1, double c2, double alpha = 0.1) {
  const double y = alpha * d;
  return i0 / (1.0 + c1 * y + c2 * y * y);
}

/// Composite field by direct summation over (x, y, i0, c1, c2) tuples in the
/// order given.
struct OracleLamp {
  double x, y, i0, c1, c2;
};

inline double field_oracle(const std::vector<OracleLamp>& lamps, double qx, double qy, double alpha = 0.1) {
  double num = 0.0, den = 0.0;
  for (const auto& l : lamps) {
    const double d = std::sqrt((l.x - qx) * (l.x - qx) + (l.y - qy) * (l.y - qy));
    if (d < 1e-6) return l.i0;
    num += attenuation_oracle(d, l.i0, l.c1, l.c2, alpha) / (d * d);
    den += 1.0 / (d * d);
  }
  return num / den;
}

/// Inverse-distance weighting by explicit weighted sum.
inline double idw_oracle(const std::vector<std::array<double, 3>>& xyv, double qx, double qy, double p) {
  double num = 0.0, den = 0.0;
  for (const auto& s : xyv) {
    const double d = std::hypot(s[0] - qx, s[1] - qy);
    if (d == 0.0) return s[2];
    const double w = std::pow(d, -p);
    num += w * s[2];
    den += w;
  }
  return num / den;
}

/// 4-connected component sizes of `mask` (rows x cols) using an explicit
/// queue, sorted descending.
inline std::vector<std::size_t> component_sizes(const std::vector<bool>& mask, std::size_t rows, std::size_t cols) {
  std::vector<int> label(mask.size(), -1);
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t n = 0;
    std::deque<std::size_t> q{start};
    label[start] = id;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop_front();
      ++n;
      const std::size_t r = k / cols, c = k % cols;
      const std::size_t nb[4] = {r > 0 ? k - cols : k, r + 1 < rows ? k + cols : k, c > 0 ? k - 1 : k,
                                 c + 1 < cols ? k + 1 : k};
      for (std::size_t m : nb) {
        if (m != k && mask[m] && label[m] < 0) {
          label[m] = id;
          q.push_back(m);
        }
      }
    }
    sizes.push_back(n);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

// Fixtures.

inline const GeoPoint kLakeCenter{30.055, -81.615};

/// Six lamps around a lake, all starting at (c1, c2) = (0, 0.03).
inline Scenario lake_scenario() {
  Scenario s;
  s.id = "lake";
  s.bbox = {{30.045, -81.625}, {30.065, -81.605}};
  s.cell_size_m = 10.0;
  const GeoPoint pts[6] = {{30.056, -81.617}, {30.055, -81.615}, {30.055, -81.613},
                           {30.053, -81.614}, {30.054, -81.614}, {30.055, -81.614}};
  for (int i = 0; i < 6; ++i) {
    LightSource src;
    src.id = "L" + std::to_string(i + 1);
    src.position = pts[i];
    src.params = AttenuationParams{16.0, 0.0, 0.03, 0.1};
    s.sources.push_back(src);
  }
  s.protected_areas.push_back({"lake", GeoPolygon({{30.05316, -81.61521},
                                                   {30.05316, -81.61422},
                                                   {30.05388, -81.61422},
                                                   {30.05388, -81.61521}})});
  return s;
}

inline Scenario with_params(Scenario s, double c1, double c2) {
  for (auto& src : s.sources) {
    src.params.c1 = c1;
    src.params.c2 = c2;
    src.profile_id.reset();
  }
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("lightfield-" + name + "-" + std::to_string(rng() % 1000000000ULL));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lftest

#endif  // LIGHTFIELD_TESTS_SUPPORT_HPP
