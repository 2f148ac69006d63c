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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lightfield/fieldmap.hpp"
#include "lightfield/footprint.hpp"
#include "lightfield/interpolation.hpp"
#include "lightfield/optimizer.hpp"
#include "lightfield/png.hpp"
#include "lightfield/scenario_io.hpp"
#include "support.hpp"

namespace {

using namespace lightfield;
using Clock = std::chrono::steady_clock;

// Pinned tolerances.
constexpr double kCoefTol = 1e-3;
constexpr double kCoefSeconds = 10.0;
constexpr double kFloorTol = 1e-6;
constexpr double kAdditivityRel = 1e-9;
constexpr double kOrderingRatio = 2.0;
constexpr double kNodeTol = 1e-9;
constexpr double kConstantTol = 1e-8;
constexpr double kIdwTol = 1e-10;
constexpr double kPlacementTolM = 0.5;
constexpr double kPlacementSeconds = 30.0;
constexpr double kSymmetryTol = 1e-9;
constexpr int kSeamTol = 1;
constexpr double kImportSeconds = 5.0;
constexpr std::size_t kImportRows = 6000;

struct Outcome {
  bool ok = true;
  std::ostringstream why;
  void check(bool cond, const std::string& msg) {
    if (!cond && ok) why << msg;
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

OptimizationSpec lake_spec(OptMode mode) {
  OptimizationSpec spec;
  spec.mode = mode;
  spec.target = Target::of(lftest::lake_scenario().area("lake").polygon);
  return spec;
}

void constraint_optimum(Outcome& o) {
  struct Case {
    OptMode mode;
    double c1_start, c2_start, expect;
  };
  for (const Case& c : {Case{OptMode::TuneC1, 0.0, 0.03, 0.65}, Case{OptMode::TuneC2, 0.03, 0.03, 0.154}}) {
    const Scenario s = lftest::with_params(lftest::lake_scenario(), c.c1_start, c.c2_start);
    const auto t0 = Clock::now();
    const auto r = solve(s, lake_spec(c.mode));
    const double secs = seconds_since(t0);
    o.check(r.converged, std::string(mode_name(c.mode)) + " did not converge: " + r.status);
    o.check(secs < kCoefSeconds, std::string(mode_name(c.mode)) + " took " + std::to_string(secs) + " s");
    for (const auto& src : r.sources) {
      const double got = c.mode == OptMode::TuneC1 ? src.params.c1 : src.params.c2;
      o.check(std::abs(got - c.expect) <= kCoefTol,
              std::string(mode_name(c.mode)) + " " + src.id + " = " + std::to_string(got));
    }
  }
}

void brightness_floor(Outcome& o) {
  for (OptMode mode : {OptMode::TuneC1, OptMode::TuneC2}) {
    const Scenario s = lftest::with_params(lftest::lake_scenario(), mode == OptMode::TuneC1 ? 0.0 : 0.03, 0.03);
    const auto r = solve(s, lake_spec(mode));
    for (const auto& src : r.sources) {
      const double v = attenuate(50.0, src.params);
      o.check(std::abs(v - 0.2 * src.params.i0) <= kFloorTol, src.id + " I(50) = " + std::to_string(v));
    }
  }
}

void footprint_additivity(Outcome& o) {
  const Scenario s = lftest::lake_scenario();
  const GeoPolygon& lake = s.area("lake").polygon;
  for (auto kind : {KernelKind::Attenuation, KernelKind::InverseSquare}) {
    const IlluminanceKernel k{kind, 10.0};
    const double total = area_footprint(s, lake, k);
    double sum = 0.0;
    for (const auto& src : s.sources) sum += source_footprint(s, src.id, lake, k);
    o.check(std::abs(total - sum) <= kAdditivityRel * total, std::string(kernel_name(kind)) + " total != ledger sum");
    o.check(total > 0.0, "empty footprint");
  }
}

void footprint_ordering(Outcome& o) {
  const Scenario initial = lftest::lake_scenario();
  const Scenario placed = apply(initial, solve(initial, lake_spec(OptMode::Placement)));
  const Scenario c1 = lftest::with_params(placed, 0.65, 0.03);
  const Scenario c2 = lftest::with_params(placed, 0.03, 0.154);
  std::vector<double> totals;
  for (const Scenario* s : {&initial, &placed, &c1, &c2}) totals.push_back(footprint_report(*s, "lake").area_total);
  for (std::size_t i = 1; i < totals.size(); ++i) {
    o.check(totals[i] < totals[i - 1], "configuration " + std::to_string(i + 1) + " not below its predecessor");
  }
  o.check(totals.front() / totals.back() > kOrderingRatio,
          "ratio " + std::to_string(totals.front() / totals.back()));
}

void interpolation_properties(Outcome& o) {
  const LocalFrame f(lftest::kLakeCenter);
  const InterpMethod methods[] = {InterpMethod::idw(),
                                  InterpMethod::of(InterpKind::Shepard),
                                  InterpMethod::of(InterpKind::Kriging),
                                  InterpMethod::of(InterpKind::Rbf),
                                  InterpMethod::idw_vp(3.5),
                                  InterpMethod::of(InterpKind::Nni)};
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-400.0, 400.0);
  std::vector<SamplePoint> wavy, flat;
  for (int i = 0; i < 25; ++i) {
    const Vec2 v{u(rng), u(rng)};
    wavy.push_back({f.unproject(v), 19.0 + 1.5 * std::sin(v.x / 150.0) * std::cos(v.y / 200.0)});
    flat.push_back({f.unproject(v), 20.75});
  }
  for (const auto& m : methods) {
    const Interpolator interp(m, wavy, f);
    for (const auto& s : wavy) {
      o.check(std::abs(interp(s.position) - s.value) <= kNodeTol,
              std::string(method_name(m.kind)) + " misses a node");
    }
    const auto loo = leave_one_out(m, wavy, f, 21.5);
    o.check(loo.folds.size() == wavy.size() && loo.failed == 0 && std::isfinite(loo.mean_abs_error),
            std::string(method_name(m.kind)) + " leave-one-out incomplete");
  }
  for (auto kind : {InterpKind::Kriging, InterpKind::Rbf}) {
    const Interpolator interp(InterpMethod::of(kind), flat, f);
    for (int i = 0; i < 50; ++i) {
      o.check(std::abs(interp(f.unproject({u(rng), u(rng)})) - 20.75) <= kConstantTol,
              std::string(method_name(kind)) + " drifts on a constant field");
    }
  }
  std::mt19937 rng2(1234);
  std::uniform_int_distribution<int> count(3, 40);
  std::uniform_real_distribution<double> w(-600.0, 600.0), val(16.0, 22.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SamplePoint> samples;
    std::vector<std::array<double, 3>> xyv;
    for (int i = count(rng2); i > 0; --i) {
      const GeoPoint p = f.unproject({w(rng2), w(rng2)});
      const Vec2 v = f.project(p);
      const double value = val(rng2);
      samples.push_back({p, value});
      xyv.push_back({v.x, v.y, value});
    }
    const GeoPoint q = f.unproject({w(rng2), w(rng2)});
    const Vec2 qv = f.project(q);
    o.check(std::abs(interpolate(InterpMethod::idw(), samples, q, f) - lftest::idw_oracle(xyv, qv.x, qv.y, 2.0)) <=
                kIdwTol,
            "IDW disagrees with the brute-force oracle");
  }
}

void placement_oracle(Outcome& o) {
  Scenario s;
  s.id = "single";
  s.bbox = {{30.050, -81.620}, {30.060, -81.610}};
  LightSource src;
  src.id = "a";
  src.position = s.bbox.center();
  src.params = {16.0, 0.06, 0.03, 0.1};
  s.sources.push_back(src);
  const LocalFrame f = s.frame();
  const Vec2 target{200.0, 0.0};
  OptimizationSpec spec;
  spec.mode = OptMode::Placement;
  spec.target = Target::of(std::vector<GeoPoint>{f.unproject(target)});
  const auto t0 = Clock::now();
  const auto r = solve(s, spec);
  const double secs = seconds_since(t0);
  const Vec2 got = f.project(r.sources[0].position);
  double best = std::numeric_limits<double>::infinity();
  Vec2 arg{};
  for (double x = -50.0; x <= 50.0; x += 0.25) {
    for (double y = -50.0; y <= 50.0; y += 0.25) {
      if (x * x + y * y > 2500.0) continue;
      const double v = lftest::attenuation_oracle(std::hypot(target.x - x, target.y - y), 16.0, 0.06, 0.03);
      if (v < best) best = v, arg = {x, y};
    }
  }
  o.check((got - arg).norm() <= kPlacementTolM, "placed " + std::to_string((got - arg).norm()) + " m from oracle");
  o.check(secs < kPlacementSeconds, "placement took " + std::to_string(secs) + " s");
}

void rendering_invariants(Outcome& o) {
  o.check(colormap(0.0) == Rgb{0, 0, 0} && colormap(1.0) == Rgb{255, 255, 255}, "colormap endpoints");
  o.check(colormap(0.5) == Rgb{255, 210, 0}, "colormap midpoint");

  Scenario one;
  one.id = "one";
  one.bbox = {{30.050, -81.620}, {30.060, -81.610}};
  one.cell_size_m = 5.0;
  LightSource src;
  src.id = "a";
  src.position = one.bbox.center();
  src.params = {16.0, 0.06, 0.03, 0.1};
  one.sources.push_back(src);
  const FieldGrid g = render_grid(one);
  const std::size_t rows = g.spec.rows(), cols = g.spec.cols();
  double worst = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = g.spec.cell_center_local(r, c).norm();
      worst = std::max(worst, std::abs(g.at(r, c) - lftest::attenuation_oracle(d, 16.0, 0.06, 0.03)));
      worst = std::max(worst, std::abs(g.at(r, c) - g.at(rows - 1 - r, cols - 1 - c)));
    }
  }
  o.check(worst < kSymmetryTol, "radial asymmetry " + std::to_string(worst));

  const Scenario s = lftest::lake_scenario();
  const TileId a = tile_for(lftest::kLakeCenter, 18);
  const Image ia = render_tile(s, a), ir = render_tile(s, {a.z, a.x + 1, a.y}), ib = render_tile(s, {a.z, a.x, a.y + 1});
  int seam = 0;
  const int e = kTileSize - 1;
  for (int k = 0; k < kTileSize; ++k) {
    for (int ch = 0; ch < 3; ++ch) {
      const int across_x = std::abs(ia.at(e, k)[ch] - ir.at(0, k)[ch]);
      const int inside_x = std::max(std::abs(ia.at(e, k)[ch] - ia.at(e - 1, k)[ch]),
                                    std::abs(ir.at(1, k)[ch] - ir.at(0, k)[ch]));
      const int across_y = std::abs(ia.at(k, e)[ch] - ib.at(k, 0)[ch]);
      const int inside_y = std::max(std::abs(ia.at(k, e)[ch] - ia.at(k, e - 1)[ch]),
                                    std::abs(ib.at(k, 1)[ch] - ib.at(k, 0)[ch]));
      seam = std::max({seam, across_x - inside_x, across_y - inside_y});
    }
  }
  o.check(seam <= kSeamTol, "tile seam excess step " + std::to_string(seam));
  o.check(encode_png(colorize(render_grid(s), s.i0_max())) == encode_png(colorize(render_grid(s), s.i0_max())),
          "raster renders differ");
  const TileId t = tile_for(lftest::kLakeCenter, 16);
  o.check(encode_png(render_tile(s, t)) == encode_png(render_tile(s, t)), "tile renders differ");
}

void round_trips(Outcome& o) {
  const Scenario s = lftest::lake_scenario();
  o.check(scenario_from_json(json::parse(scenario_to_json(s).dump())) == s, "JSON round trip");
  const auto dir = lftest::temp_dir("accept");
  ScenarioStore store(dir);
  store.save(s);
  o.check(store.load("lake").scenario == s, "store round trip");
  std::filesystem::remove_all(dir);

  const auto layout = synthetic_layout(lftest::kLakeCenter, kImportRows, 42);
  for (const bool geo : {false, true}) {
    const std::string bytes = geo ? layout_to_geojson(layout) : layout_to_csv(layout);
    const auto t0 = Clock::now();
    const auto r = geo ? import_sources_geojson(bytes, 1) : import_sources_csv(bytes, 1);
    const double secs = seconds_since(t0);
    const std::string fmt = geo ? "GeoJSON" : "CSV";
    o.check(secs < kImportSeconds, fmt + " import took " + std::to_string(secs) + " s");
    o.check(r.report.accepted == kImportRows && r.report.rejected.empty(), fmt + " import rejected rows");
    bool same = r.sources.size() == layout.size();
    for (std::size_t i = 0; same && i < layout.size(); ++i) {
      same = r.sources[i].id == layout[i].id && r.sources[i].profile_id == layout[i].profile_id &&
             std::abs(r.sources[i].position.lat_deg - layout[i].position.lat_deg) <= 1e-9 &&
             std::abs(r.sources[i].position.lon_deg - layout[i].position.lon_deg) <= 1e-9;
    }
    o.check(same, fmt + " import differs from layout");
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"constraint-optimum", constraint_optimum},
      {"brightness-floor", brightness_floor},
      {"footprint-additivity", footprint_additivity},
      {"footprint-ordering", footprint_ordering},
      {"interpolation-properties", interpolation_properties},
      {"placement-oracle", placement_oracle},
      {"rendering-invariants", rendering_invariants},
      {"round-trips", round_trips},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("threw: ") + e.what());
    }
    if (o.ok) {
      std::printf("PASS %s\n", name);
    } else {
      std::printf("FAIL %s: %s\n", name, o.why.str().c_str());
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
