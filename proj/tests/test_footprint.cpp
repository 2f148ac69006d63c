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

#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "lightfield/footprint.hpp"
#include "lightfield/optimizer.hpp"
#include "support.hpp"

namespace {

using namespace lightfield;

double ledger_sum(const Scenario& s, const GeoPolygon& area, const IlluminanceKernel& k, double cell) {
  double sum = 0.0;
  for (const auto* src : s.sorted_sources()) sum += source_footprint(s, src->id, area, k, cell);
  return sum;
}

TEST(Footprint, AdditiveOnLakeForBothKernels) {
  const Scenario s = lftest::lake_scenario();
  const GeoPolygon& lake = s.area("lake").polygon;
  for (auto kind : {KernelKind::Attenuation, KernelKind::InverseSquare}) {
    const IlluminanceKernel k{kind, 10.0};
    const double total = area_footprint(s, lake, k);
    EXPECT_NEAR(total, ledger_sum(s, lake, k, 1.0), 1e-9 * total) << kernel_name(kind);
    const auto report = footprint_report(s, "lake", k);
    EXPECT_NEAR(report.area_total, total, 1e-9 * total);
  }
}

TEST(Footprint, AdditiveOnRandomPolygons) {
  const Scenario s = lftest::lake_scenario();
  const LocalFrame f = s.frame();
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> centre(-300.0, 300.0), radius(20.0, 120.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec2 c{centre(rng), centre(rng)};
    const double r = radius(rng);
    std::vector<GeoPoint> ring;
    for (int k = 0; k < 7; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 7.0;
      const double rk = r * (0.6 + 0.4 * ((k * 37) % 5) / 4.0);
      ring.push_back(f.unproject({c.x + rk * std::cos(a), c.y + rk * std::sin(a)}));
    }
    const GeoPolygon poly(ring);
    const double total = area_footprint(s, poly, {}, 2.0);
    EXPECT_NEAR(total, ledger_sum(s, poly, {}, 2.0), 1e-9 * std::max(total, 1e-300));
  }
}

TEST(Footprint, NineCellHandSum) {
  Scenario s;
  s.id = "nine";
  s.bbox = {{30.050, -81.620}, {30.060, -81.610}};
  const GeoPoint c = s.bbox.center();
  LightSource src;
  src.id = "a";
  src.params = {16.0, 0.06, 0.03, 0.1};
  // 40 m east and 25 m north of the box center
  const double mlat = 6378137.0 * std::numbers::pi / 180.0;
  const double mlon = mlat * std::cos(c.lat_deg * std::numbers::pi / 180.0);
  src.position = {c.lat_deg + 25.0 / mlat, c.lon_deg + 40.0 / mlon};
  s.sources.push_back(src);
  // 30.5 m square around the center: a 3 x 3 lattice of 10 m cells centred on it
  const double h = 15.25;
  const GeoPolygon area({{c.lat_deg - h / mlat, c.lon_deg - h / mlon},
                         {c.lat_deg - h / mlat, c.lon_deg + h / mlon},
                         {c.lat_deg + h / mlat, c.lon_deg + h / mlon},
                         {c.lat_deg + h / mlat, c.lon_deg - h / mlon}});
  double expect = 0.0;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      const GeoPoint cell{c.lat_deg + 10.0 * j / mlat, c.lon_deg + 10.0 * i / mlon};
      const double d = lftest::haversine_m(cell, src.position);
      expect += lftest::attenuation_oracle(d, 16.0, 0.06, 0.03) / 16.0 * 100.0;
    }
  }
  EXPECT_NEAR(area_footprint(s, area, {}, 10.0), expect, 1e-4 * expect);
  EXPECT_EQ(detail::area_cells(s, area, 10.0).centers.size(), 9u);
}

TEST(Footprint, KernelValues) {
  const AttenuationParams p{16.0, 0.06, 0.03, 0.1};
  EXPECT_DOUBLE_EQ(kernel_value(0.0, p, {KernelKind::Attenuation}, 16.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_value(50.0, p, {KernelKind::Attenuation}, 16.0),
                   lftest::attenuation_oracle(50.0, 16.0, 0.06, 0.03) / 16.0);
  const IlluminanceKernel sq{KernelKind::InverseSquare, 10.0};
  EXPECT_DOUBLE_EQ(kernel_value(0.0, p, sq, 16.0), 1.0);
  const double rho = std::hypot(30.0, 10.0);
  EXPECT_NEAR(kernel_value(30.0, p, sq, 16.0), std::pow(10.0 / rho, 3), 1e-15);
  EXPECT_THROW(kernel_value(1.0, p, sq, 0.0), Error);
  EXPECT_THROW((IlluminanceKernel{KernelKind::InverseSquare, -1.0}.validate()), Error);
}

TEST(Footprint, LedgerSortedAndTotalsRowSum) {
  const Scenario s = lftest::lake_scenario();
  const auto r = footprint_report(s, "lake");
  ASSERT_EQ(r.per_source.size(), 6u);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.per_source.size(); ++i) {
    sum += r.per_source[i].footprint;
    if (i > 0) EXPECT_GE(r.per_source[i - 1].footprint, r.per_source[i].footprint);
  }
  EXPECT_NEAR(r.area_total, sum, 1e-9 * sum);
  EXPECT_EQ(r.area_name, "lake");
}

TEST(Footprint, MoreAttenuationShrinksEveryRow) {
  const Scenario base = lftest::lake_scenario();
  const Scenario dim = lftest::with_params(base, 0.65, 0.03);
  const GeoPolygon& lake = base.area("lake").polygon;
  for (const auto& src : base.sources) {
    EXPECT_LT(source_footprint(dim, src.id, lake), source_footprint(base, src.id, lake));
  }
}

TEST(Footprint, FourConfigurationsStrictlyDecreasing) {
  const Scenario initial = lftest::lake_scenario();
  OptimizationSpec spec;
  spec.mode = OptMode::Placement;
  spec.target = Target::of(initial.area("lake").polygon);
  const Scenario placed = apply(initial, solve(initial, spec));
  const Scenario c1 = lftest::with_params(placed, 0.65, 0.03);
  const Scenario c2 = lftest::with_params(placed, 0.03, 0.154);
  double prev = std::numeric_limits<double>::infinity();
  std::vector<double> totals;
  for (const Scenario* s : {&initial, &placed, &c1, &c2}) {
    const double t = footprint_report(*s, "lake").area_total;
    EXPECT_LT(t, prev);
    prev = t;
    totals.push_back(t);
  }
  EXPECT_GT(totals.front() / totals.back(), 2.0);
}

TEST(Footprint, DisjointAreaIsZero) {
  const Scenario s = lftest::lake_scenario();
  const GeoPolygon far({{30.5, -81.0}, {30.5, -80.99}, {30.51, -80.99}});
  EXPECT_EQ(area_footprint(s, far), 0.0);
}

TEST(Footprint, Errors) {
  const Scenario s = lftest::lake_scenario();
  const GeoPolygon& lake = s.area("lake").polygon;
  try {
    source_footprint(s, "nope", lake);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSource);
  }
  try {
    footprint_report(s, std::string("pond"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
  EXPECT_THROW(area_footprint(s, lake, {}, 0.0), Error);
  EXPECT_EQ(parse_kernel("inverse_square"), KernelKind::InverseSquare);
  EXPECT_THROW(parse_kernel("cosine"), Error);
}

}  // namespace
