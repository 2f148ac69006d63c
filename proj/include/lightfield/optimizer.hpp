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

#ifndef LIGHTFIELD_OPTIMIZER_HPP
#define LIGHTFIELD_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lightfield/error.hpp"
#include "lightfield/fieldmap.hpp"
#include "lightfield/geo.hpp"
#include "lightfield/lightmodel.hpp"
#include "lightfield/scenario.hpp"
#include "lightfield/sqp.hpp"

namespace lightfield {

enum class OptMode { Placement, TuneC1, TuneC2, Joint };

inline constexpr std::string_view mode_name(OptMode m) {
  switch (m) {
    case OptMode::Placement: return "placement";
    case OptMode::TuneC1: return "tune_c1";
    case OptMode::TuneC2: return "tune_c2";
    case OptMode::Joint: return "joint";
  }
  return "placement";
}

inline OptMode parse_mode(std::string_view s) {
  for (OptMode m : {OptMode::Placement, OptMode::TuneC1, OptMode::TuneC2, OptMode::Joint}) {
    if (mode_name(m) == s) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown optimization mode '" + std::string(s) + "'");
}

/// Where brightness is measured: a polygon (sampled at cell centers) or an
/// explicit point list.
struct Target {
  std::optional<GeoPolygon> polygon;
  std::vector<GeoPoint> points;

  static Target of(GeoPolygon poly) { return {std::move(poly), {}}; }
  static Target of(std::vector<GeoPoint> pts) { return {std::nullopt, std::move(pts)}; }
};

struct OptimizationSpec {
  OptMode mode = OptMode::Placement;
  double slack_R_m = 50.0;
  double omega = 0.2;
  Target target;
  int max_iters = 200;
  double tolerance = 1e-6;
};

inline constexpr double kCoefficientMax = 10.0;
inline constexpr std::size_t kMaxTargetPoints = 2000;
inline constexpr double kTargetSourceExclusionM = 1e-3;

inline void validate(const OptimizationSpec& spec) {
  if (!(spec.omega > 0.0 && spec.omega < 1.0)) throw Error(ErrorCode::InvalidArgument, "omega must lie in (0, 1)");
  if (!(spec.slack_R_m > 0.0) || !std::isfinite(spec.slack_R_m)) {
    throw Error(ErrorCode::InvalidArgument, "slack_R_m must be positive");
  }
  if (!spec.target.polygon && spec.target.points.empty()) throw Error(ErrorCode::EmptyTarget, "target is empty");
  if (spec.max_iters <= 0) throw Error(ErrorCode::InvalidArgument, "max_iters must be positive");
  if (!(spec.tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
}

/// Evaluation points of a target. Polygons are sampled at the centers of the
/// scenario-resolution cells inside them, decimated to every k-th cell when
/// more than kMaxTargetPoints qualify. Points within 1 mm of a lamp are dropped.
inline std::vector<GeoPoint> target_points(const Scenario& scenario, const Target& target) {
  std::vector<GeoPoint> pts;
  if (target.polygon) {
    const GridSpec grid(target.polygon->bbox(), scenario.cell_size_m);
    const auto cells = cells_in(*target.polygon, grid);
    const std::size_t stride = std::max<std::size_t>(1, (cells.size() + kMaxTargetPoints - 1) / kMaxTargetPoints);
    for (std::size_t k = 0; k < cells.size(); k += stride) pts.push_back(grid.cell_center(cells[k]));
  }
  pts.insert(pts.end(), target.points.begin(), target.points.end());
  const LocalFrame frame = scenario.frame();
  std::vector<GeoPoint> kept;
  for (const GeoPoint& p : pts) {
    const Vec2 q = frame.project_checked(p);
    bool near = false;
    for (const auto& s : scenario.sources) near = near || (frame.project(s.position) - q).norm() < kTargetSourceExclusionM;
    if (!near) kept.push_back(p);
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyTarget, "target has no evaluation points");
  return kept;
}

/// Mean composite field over precomputed local evaluation points.
inline double mean_field(const FieldEvaluator& field, const std::vector<Vec2>& pts) {
  double sum = 0.0;
  for (const Vec2& q : pts) sum += field.at_local(q);
  return sum / static_cast<double>(pts.size());
}

inline double objective(const Scenario& scenario, const Target& target) {
  if (scenario.sources.empty()) throw Error(ErrorCode::NoSources, "objective needs at least one light source");
  const FieldEvaluator field(scenario);
  std::vector<Vec2> local;
  for (const GeoPoint& p : target_points(scenario, target)) local.push_back(field.frame().project_checked(p));
  return mean_field(field, local);
}

/// Placement constraint d^2(p, anchor) - R^2; non-positive inside the slack disk.
inline double g_constraint(const GeoPoint& p, const GeoPoint& anchor, double R_m, const LocalFrame& frame) {
  const double d = distance_m(p, anchor, frame);
  return d * d - R_m * R_m;
}

/// Street-illumination constraint omega*(1 + c1*y + c2*y^2) - 1 with y = alpha*R;
/// non-positive when the lamp keeps at least omega of its I0 at distance R.
inline double h_constraint(double c1, double c2, double omega, double y) {
  return omega * attenuation_denominator(c1, c2, y) - 1.0;
}

struct ConstraintResidual {
  std::string source_id;
  double g = 0.0;
  std::optional<double> h;  // present when attenuation is a free variable
};

struct OptimizationResult {
  OptMode mode = OptMode::Placement;
  std::vector<LightSource> sources_before;
  std::vector<LightSource> sources;  // optimized, in scenario order
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::vector<ConstraintResidual> residuals;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<opt::TraceEntry> trace;
};

namespace detail {

struct LayoutVars {
  bool position = false;
  bool c1 = false;
  bool c2 = false;
  std::size_t per_source() const { return (position ? 2 : 0) + (c1 ? 1 : 0) + (c2 ? 1 : 0); }
};

inline LayoutVars vars_for(OptMode m) {
  switch (m) {
    case OptMode::Placement: return {true, false, false};
    case OptMode::TuneC1: return {false, true, false};
    case OptMode::TuneC2: return {false, false, true};
    case OptMode::Joint: return {true, true, true};
  }
  return {};
}

// Shrinks (c1, c2) proportionally until the lamp keeps omega of I0 at distance R.
inline void restore_brightness(double& c1, double& c2, double omega, double y) {
  if (h_constraint(c1, c2, omega, y) <= 0.0) return;
  const double excess = c1 * y + c2 * y * y;
  const double k = (1.0 / omega - 1.0) / excess * (1.0 - 1e-9);
  c1 *= k;
  c2 *= k;
}

}  // namespace detail

/// Minimizes the mean composite field over the target by moving lamps within
/// their slack disks and/or retuning attenuation, depending on the mode.
/// Lamps are optimized jointly as one stacked vector, in id order.
inline OptimizationResult solve(const Scenario& scenario, const OptimizationSpec& spec) {
  validate(spec);
  if (scenario.sources.empty()) throw Error(ErrorCode::NoSources, "nothing to optimize");
  const LocalFrame frame = scenario.frame();
  const detail::LayoutVars vars = detail::vars_for(spec.mode);
  const std::size_t k = vars.per_source();
  const auto order = scenario.sorted_sources();
  const std::size_t ns = order.size();
  const auto n = static_cast<Eigen::Index>(k * ns);
  const double R = spec.slack_R_m;

  std::vector<Vec2> eval;
  for (const GeoPoint& p : target_points(scenario, spec.target)) eval.push_back(frame.project_checked(p));

  std::vector<FieldEvaluator::Lamp> base;
  for (const LightSource* s : order) base.push_back({frame.project(s->position), s->params});

  auto layout = [&](const opt::Vector& x) {
    std::vector<FieldEvaluator::Lamp> lamps = base;
    for (std::size_t i = 0; i < ns; ++i) {
      auto off = static_cast<Eigen::Index>(i * k);
      if (vars.position) {
        lamps[i].position = base[i].position + Vec2{x(off), x(off + 1)};
        off += 2;
      }
      if (vars.c1) lamps[i].params.c1 = x(off++);
      if (vars.c2) lamps[i].params.c2 = x(off++);
    }
    return lamps;
  };

  opt::Problem problem;
  problem.lower = opt::Vector::Constant(n, -std::numeric_limits<double>::infinity());
  problem.upper = opt::Vector::Constant(n, std::numeric_limits<double>::infinity());
  problem.scale = opt::Vector::Ones(n);
  opt::Vector x0(n);
  for (std::size_t i = 0; i < ns; ++i) {
    auto off = static_cast<Eigen::Index>(i * k);
    const AttenuationParams& p = base[i].params;
    const double y = p.alpha * R;
    double c1 = std::clamp(p.c1, 0.0, kCoefficientMax), c2 = std::clamp(p.c2, 0.0, kCoefficientMax);
    if (vars.c1 || vars.c2) {
      // Only the free coefficient may move during restoration.
      if (vars.c1 && vars.c2) {
        detail::restore_brightness(c1, c2, spec.omega, y);
      } else if (vars.c1) {
        if (h_constraint(c1, c2, spec.omega, y) > 0.0) c1 = std::max(0.0, ((1.0 / spec.omega - 1.0) - c2 * y * y) / y);
      } else if (h_constraint(c1, c2, spec.omega, y) > 0.0) {
        c2 = std::max(0.0, ((1.0 / spec.omega - 1.0) - c1 * y) / (y * y));
      }
      if (h_constraint(c1, c2, spec.omega, y) > 1e-9) {
        throw Error(ErrorCode::Infeasible,
                    "source '" + order[i]->id + "' cannot keep omega brightness at R with its fixed coefficient");
      }
    }
    if (vars.position) {
      x0(off) = 0.0;
      x0(off + 1) = 0.0;
      problem.scale(off) = problem.scale(off + 1) = R;
      const auto ci = off;
      problem.constraints.push_back([ci, R](const opt::Vector& x) { return x(ci) * x(ci) + x(ci + 1) * x(ci + 1) - R * R; });
      off += 2;
    }
    std::optional<Eigen::Index> i1, i2;
    if (vars.c1) {
      i1 = off;
      x0(off) = c1;
      problem.lower(off) = 0.0;
      problem.upper(off) = kCoefficientMax;
      ++off;
    }
    if (vars.c2) {
      i2 = off;
      x0(off) = c2;
      problem.lower(off) = 0.0;
      problem.upper(off) = kCoefficientMax;
      ++off;
    }
    if (vars.c1 || vars.c2) {
      const double omega = spec.omega;
      const double fc1 = c1, fc2 = c2;
      problem.constraints.push_back([=](const opt::Vector& x) {
        return h_constraint(i1 ? x(*i1) : fc1, i2 ? x(*i2) : fc2, omega, y);
      });
    }
  }

  problem.objective = [&](const opt::Vector& x) {
    return mean_field(FieldEvaluator(frame, layout(x)), eval);
  };
  problem.project = [&](const opt::Vector& x) {
    opt::Vector out = x;
    for (std::size_t i = 0; i < ns; ++i) {
      auto off = static_cast<Eigen::Index>(i * k);
      if (vars.position) {
        const double r = std::hypot(out(off), out(off + 1));
        if (r > R) {
          out(off) *= R / r;
          out(off + 1) *= R / r;
        }
        off += 2;
      }
      double c1 = vars.c1 ? std::clamp(out(off), 0.0, kCoefficientMax) : base[i].params.c1;
      double c2 = vars.c2 ? std::clamp(out(vars.c1 ? off + 1 : off), 0.0, kCoefficientMax) : base[i].params.c2;
      const double y = base[i].params.alpha * R;
      if ((vars.c1 || vars.c2) && h_constraint(c1, c2, spec.omega, y) > 0.0) {
        if (vars.c1 && vars.c2) {
          detail::restore_brightness(c1, c2, spec.omega, y);
        } else if (vars.c1) {
          c1 = std::max(0.0, ((1.0 / spec.omega - 1.0) - c2 * y * y) / y);
        } else {
          c2 = std::max(0.0, ((1.0 / spec.omega - 1.0) - c1 * y) / (y * y));
        }
      }
      if (vars.c1) out(off++) = c1;
      if (vars.c2) out(off++) = c2;
    }
    return out;
  };

  OptimizationResult result;
  result.mode = spec.mode;
  result.sources_before = scenario.sources;
  result.objective_before = mean_field(FieldEvaluator(frame, base), eval);

  opt::Options options;
  options.max_iters = spec.max_iters;
  options.tolerance = std::min(1e-8, spec.tolerance);
  options.feasibility_tol = std::min(1e-9, spec.tolerance);
  const opt::Result run = opt::minimize(problem, x0, options);

  // Snap onto the feasible set; the solver's own residuals are already tiny.
  opt::Vector x = problem.project(run.x);
  double after = problem.objective(x);
  const double initial = problem.objective(problem.project(x0));
  if (after > initial) {
    x = problem.project(x0);
    after = initial;
  }

  const auto lamps = layout(x);
  result.sources = scenario.sources;
  for (std::size_t i = 0; i < ns; ++i) {
    LightSource& out = *std::find_if(result.sources.begin(), result.sources.end(),
                                     [&](const LightSource& s) { return s.id == order[i]->id; });
    if (vars.position) out.position = frame.unproject(lamps[i].position);
    if (vars.c1) out.params.c1 = lamps[i].params.c1;
    if (vars.c2) out.params.c2 = lamps[i].params.c2;
    if (!out.profile_consistent()) out.profile_id.reset();
    ConstraintResidual res{out.id, (lamps[i].position - base[i].position).norm2() - R * R, std::nullopt};
    if (vars.c1 || vars.c2) {
      res.h = h_constraint(out.params.c1, out.params.c2, spec.omega, out.params.alpha * R);
    }
    result.residuals.push_back(res);
  }
  result.objective_after = after;
  result.iterations = run.iterations;
  result.converged = run.converged;
  result.status = run.status;
  result.trace = run.trace;
  return result;
}

/// Scenario with the optimized lamps swapped in.
inline Scenario apply(const Scenario& scenario, const OptimizationResult& result) {
  Scenario out = scenario;
  out.sources = result.sources;
  return out;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_OPTIMIZER_HPP
