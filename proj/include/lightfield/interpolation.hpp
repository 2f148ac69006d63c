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

#ifndef LIGHTFIELD_INTERPOLATION_HPP
#define LIGHTFIELD_INTERPOLATION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lightfield/csv.hpp"
#include "lightfield/error.hpp"
#include "lightfield/geo.hpp"

namespace lightfield {

struct SamplePoint {
  GeoPoint position;
  double value = 0.0;  // mag/arc-sec^2
};

enum class InterpKind { Idw, Shepard, Kriging, Rbf, IdwVp, Nni };

struct InterpMethod {
  InterpKind kind = InterpKind::Idw;
  /// Distance exponent. Fixed at 2 for plain IDW; tunable in [1, 6] for IdwVp.
  double power = 2.0;

  static InterpMethod idw() { return {InterpKind::Idw, 2.0}; }
  static InterpMethod idw_vp(double p) { return {InterpKind::IdwVp, p}; }
  static InterpMethod of(InterpKind k) { return {k, 2.0}; }

  void validate() const {
    if (kind == InterpKind::Idw && power != 2.0) {
      throw Error(ErrorCode::InvalidArgument, "plain IDW uses power 2; use idw-vp to vary it");
    }
    if (kind == InterpKind::IdwVp && !(power >= 1.0 && power <= 6.0)) {
      throw Error(ErrorCode::InvalidArgument, "idw-vp power must lie in [1, 6]");
    }
  }
};

inline constexpr std::string_view method_name(InterpKind k) {
  switch (k) {
    case InterpKind::Idw: return "idw";
    case InterpKind::Shepard: return "shepard";
    case InterpKind::Kriging: return "kriging";
    case InterpKind::Rbf: return "rbf";
    case InterpKind::IdwVp: return "idw-vp";
    case InterpKind::Nni: return "nni";
  }
  return "idw";
}

inline InterpKind parse_method(std::string_view name) {
  for (InterpKind k : {InterpKind::Idw, InterpKind::Shepard, InterpKind::Kriging, InterpKind::Rbf,
                       InterpKind::IdwVp, InterpKind::Nni}) {
    if (method_name(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown interpolation method '" + std::string(name) + "'");
}

// Fitted exponential variogram: gamma(h) = nugget + sill * (1 - exp(-h / range)), h > 0.
struct Variogram {
  double nugget = 1e-6;
  double sill = 1.0;
  double range = 1.0;

  double operator()(double h) const {
    if (h <= 0.0) return 0.0;
    return nugget + sill * (1.0 - std::exp(-h / range));
  }
};

namespace detail {

inline constexpr double kCoincidentM = 1e-9;
inline constexpr double kNuggetFloor = 1e-6;
inline constexpr double kRbfRidge = 1e-8;
inline constexpr int kVariogramBins = 8;

inline double thin_plate(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

/// Least-squares exponential fit to the binned empirical semivariogram of
/// normalized values. Weights are invariant to the variogram's overall scale,
/// so fitting on values divided by their variance loses nothing.
inline Variogram fit_variogram(const std::vector<Vec2>& pts, const std::vector<double>& vals) {
  const std::size_t n = pts.size();
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  double h_max = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) h_max = std::max(h_max, (pts[i] - pts[j]).norm());
  if (h_max <= 0.0) h_max = 1.0;

  if (var <= 0.0) return {kNuggetFloor, 1.0, h_max / 3.0};

  std::array<double, kVariogramBins> sum_h{}, sum_g{};
  std::array<int, kVariogramBins> count{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double h = (pts[i] - pts[j]).norm();
      const double g = 0.5 * (vals[i] - vals[j]) * (vals[i] - vals[j]) / var;
      auto b = static_cast<std::size_t>(std::min<double>(kVariogramBins - 1, h / h_max * kVariogramBins));
      sum_h[b] += h;
      sum_g[b] += g;
      ++count[b];
    }
  }
  std::vector<double> hs, gs, ws;
  for (std::size_t b = 0; b < kVariogramBins; ++b) {
    if (count[b] == 0) continue;
    hs.push_back(sum_h[b] / count[b]);
    gs.push_back(sum_g[b] / count[b]);
    ws.push_back(count[b]);
  }

  Variogram best{kNuggetFloor, 1.0, h_max / 3.0};
  double best_sse = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 64; ++k) {
    const double range = h_max * std::pow(10.0, -2.0 + 3.0 * k / 63.0);
    // Weighted linear LS for (nugget, sill) given range, with nugget >= floor, sill >= 0.
    double s11 = 0, s12 = 0, s22 = 0, t1 = 0, t2 = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double e = 1.0 - std::exp(-hs[i] / range);
      s11 += ws[i];
      s12 += ws[i] * e;
      s22 += ws[i] * e * e;
      t1 += ws[i] * gs[i];
      t2 += ws[i] * e * gs[i];
    }
    double nugget = kNuggetFloor, sill = 0.0;
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) > 1e-14 * (s11 * s22 + 1e-300)) {
      nugget = (t1 * s22 - t2 * s12) / det;
      sill = (s11 * t2 - s12 * t1) / det;
    }
    if (nugget < kNuggetFloor || sill < 0.0 || std::abs(det) <= 1e-14 * (s11 * s22 + 1e-300)) {
      nugget = kNuggetFloor;
      sill = s22 > 0.0 ? std::max(0.0, (t2 - nugget * s12) / s22) : 0.0;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double r = nugget + sill * (1.0 - std::exp(-hs[i] / range)) - gs[i];
      sse += ws[i] * r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = {nugget, sill, range};
    }
  }
  if (best.sill <= 0.0) best.sill = kNuggetFloor;
  return best;
}

}  // namespace detail

/// Interpolator fitted once to a sample set; evaluation is const and safe to
/// share across threads.
class Interpolator {
 public:
  Interpolator(InterpMethod method, const std::vector<SamplePoint>& samples, const LocalFrame& frame)
      : method_(method), frame_(frame) {
    method_.validate();
    if (samples.empty()) throw Error(ErrorCode::TooFewSamples, "interpolation needs at least one sample");
    ingest(samples);
    switch (method_.kind) {
      case InterpKind::Kriging: fit_kriging(); break;
      case InterpKind::Rbf: fit_rbf(); break;
      case InterpKind::Shepard: fit_shepard(); break;
      default: break;
    }
  }

  double operator()(const GeoPoint& query) const {
    const Vec2 q = frame_.project_checked(query) - centroid_;
    // Coincident query returns the sample itself before any weighting.
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if ((pts_[i] - q).norm() <= detail::kCoincidentM) return vals_[i];
    }
    switch (method_.kind) {
      case InterpKind::Idw: return idw(q, 2.0);
      case InterpKind::IdwVp: return idw(q, method_.power);
      case InterpKind::Shepard: return shepard(q);
      case InterpKind::Kriging: return kriging(q);
      case InterpKind::Rbf: return rbf(q);
      case InterpKind::Nni: return nearest(q);
    }
    return idw(q, 2.0);
  }

  const InterpMethod& method() const noexcept { return method_; }
  /// Messages about merged duplicate sample positions.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t sample_count() const noexcept { return pts_.size(); }
  const Variogram& variogram() const noexcept { return variogram_; }
  double shepard_radius_m() const noexcept { return shepard_radius_; }

 private:
  void ingest(const std::vector<SamplePoint>& samples) {
    std::vector<Vec2> raw;
    raw.reserve(samples.size());
    for (const auto& s : samples) {
      if (!std::isfinite(s.value)) throw Error(ErrorCode::InvalidArgument, "sample value must be finite");
      raw.push_back(frame_.project_checked(s.position));
    }
    for (const Vec2& v : raw) centroid_ = centroid_ + v;
    centroid_ = (1.0 / static_cast<double>(raw.size())) * centroid_;

    // Merge samples sharing a position by averaging their values.
    std::vector<int> counts;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const Vec2 p = raw[i] - centroid_;
      std::size_t k = 0;
      for (; k < pts_.size(); ++k) {
        if ((pts_[k] - p).norm() <= detail::kCoincidentM) break;
      }
      if (k == pts_.size()) {
        pts_.push_back(p);
        vals_.push_back(samples[i].value);
        counts.push_back(1);
      } else {
        vals_[k] += samples[i].value;
        ++counts[k];
      }
    }
    for (std::size_t k = 0; k < pts_.size(); ++k) {
      if (counts[k] > 1) {
        vals_[k] /= counts[k];
        warnings_.push_back("averaged " + std::to_string(counts[k]) + " samples sharing one position");
      }
    }
  }

  double idw(const Vec2& q, double power) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double w = 1.0 / std::pow((pts_[i] - q).norm(), power);
      num += w * vals_[i];
      den += w;
    }
    return num / den;
  }

  double nearest(const Vec2& q) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double d = (pts_[i] - q).norm2();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return vals_[best];
  }

  void fit_shepard() {
    if (pts_.size() < 2) return;
    double total = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < pts_.size(); ++j) {
        if (i != j) nn = std::min(nn, (pts_[i] - pts_[j]).norm());
      }
      total += nn;
    }
    shepard_radius_ = 2.0 * total / static_cast<double>(pts_.size());
  }

  // Franke-Little localized weights ((R - d)+ / (R d))^2.
  double shepard(const Vec2& q) const {
    if (pts_.size() < 2) return vals_.front();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double d = (pts_[i] - q).norm();
      if (d >= shepard_radius_) continue;
      const double t = (shepard_radius_ - d) / (shepard_radius_ * d);
      num += t * t * vals_[i];
      den += t * t;
    }
    if (den <= 0.0) return idw(q, 2.0);
    return num / den;
  }

  void fit_kriging() {
    const std::size_t n = pts_.size();
    if (n < 3) throw Error(ErrorCode::TooFewSamples, "kriging needs at least 3 distinct samples");
    variogram_ = detail::fit_variogram(pts_, vals_);
    Eigen::MatrixXd a(n + 1, n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) a(i, j) = variogram_((pts_[i] - pts_[j]).norm());
      a(i, n) = 1.0;
      a(n, i) = 1.0;
    }
    a(n, n) = 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularSystem, "kriging system is singular");
    system_inverse_ = lu.inverse();
  }

  double kriging(const Vec2& q) const {
    const std::size_t n = pts_.size();
    Eigen::VectorXd rhs(n + 1);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = variogram_((pts_[i] - q).norm());
    rhs(n) = 1.0;
    const Eigen::VectorXd w = system_inverse_ * rhs;
    double est = 0.0;
    for (std::size_t i = 0; i < n; ++i) est += w(i) * vals_[i];
    return est;
  }

  void fit_rbf() {
    const std::size_t n = pts_.size();
    rbf_scale_ = 0.0;
    for (const Vec2& p : pts_) rbf_scale_ = std::max(rbf_scale_, p.norm());
    if (rbf_scale_ <= 0.0) rbf_scale_ = 1.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 3);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 pi = (1.0 / rbf_scale_) * pts_[i];
      for (std::size_t j = 0; j < n; ++j) {
        a(i, j) = detail::thin_plate(((1.0 / rbf_scale_) * pts_[j] - pi).norm());
      }
      a(i, i) += detail::kRbfRidge;
      a(i, n) = a(n, i) = 1.0;
      a(i, n + 1) = a(n + 1, i) = pi.x;
      a(i, n + 2) = a(n + 2, i) = pi.y;
      b(i) = vals_[i];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) {
      throw Error(ErrorCode::SingularSystem,
                  "thin-plate system is singular (need 3 non-collinear samples)");
    }
    rbf_coef_ = lu.solve(b);
  }

  double rbf(const Vec2& q) const {
    const std::size_t n = pts_.size();
    const Vec2 u = (1.0 / rbf_scale_) * q;
    double est = rbf_coef_(n) + rbf_coef_(n + 1) * u.x + rbf_coef_(n + 2) * u.y;
    for (std::size_t i = 0; i < n; ++i) {
      est += rbf_coef_(i) * detail::thin_plate(((1.0 / rbf_scale_) * pts_[i] - u).norm());
    }
    return est;
  }

  InterpMethod method_;
  LocalFrame frame_;
  Vec2 centroid_{};
  std::vector<Vec2> pts_;
  std::vector<double> vals_;
  std::vector<std::string> warnings_;
  double shepard_radius_ = 0.0;
  Variogram variogram_{};
  Eigen::MatrixXd system_inverse_;
  double rbf_scale_ = 1.0;
  Eigen::VectorXd rbf_coef_;
};

inline double interpolate(const InterpMethod& method, const std::vector<SamplePoint>& samples,
                          const GeoPoint& query, const LocalFrame& frame) {
  return Interpolator(method, samples, frame)(query);
}

struct LooFold {
  std::size_t index = 0;
  GeoPoint position;
  double actual = 0.0;
  std::optional<double> estimate;  // empty when the fold failed
  double abs_error = 0.0;
  std::optional<double> error_variance_pct;  // |estimate - baseline| / baseline * 100
  std::string error;
};

struct LooReport {
  InterpMethod method;
  std::vector<LooFold> folds;
  double mean_abs_error = 0.0;
  std::size_t failed = 0;
  std::optional<double> baseline;
  std::optional<double> mean_error_variance_pct;

  const LooFold& fold(std::size_t index) const {
    for (const auto& f : folds) {
      if (f.index == index) return f;
    }
    throw Error(ErrorCode::InvalidArgument, "no fold for sample " + std::to_string(index));
  }
};

/// Estimates every sample from the remaining ones. Folds whose fit throws are
/// recorded as failed and excluded from the means.
inline LooReport leave_one_out(const InterpMethod& method, const std::vector<SamplePoint>& samples,
                               const LocalFrame& frame, std::optional<double> baseline = std::nullopt) {
  if (samples.size() < 3) throw Error(ErrorCode::TooFewSamples, "leave-one-out needs at least 3 samples");
  if (baseline && !(*baseline > 0.0)) throw Error(ErrorCode::InvalidArgument, "baseline must be positive");
  method.validate();
  LooReport report{method, {}, 0.0, 0, baseline, std::nullopt};
  double err_sum = 0.0, var_sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    LooFold fold{i, samples[i].position, samples[i].value, std::nullopt, 0.0, std::nullopt, {}};
    std::vector<SamplePoint> rest;
    rest.reserve(samples.size() - 1);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (j != i) rest.push_back(samples[j]);
    }
    try {
      const double est = Interpolator(method, rest, frame)(samples[i].position);
      fold.estimate = est;
      fold.abs_error = std::abs(est - samples[i].value);
      if (baseline) fold.error_variance_pct = std::abs(est - *baseline) / *baseline * 100.0;
      err_sum += fold.abs_error;
      if (fold.error_variance_pct) var_sum += *fold.error_variance_pct;
      ++ok;
    } catch (const Error& e) {
      fold.error = e.what();
      ++report.failed;
    }
    report.folds.push_back(std::move(fold));
  }
  if (ok > 0) {
    report.mean_abs_error = err_sum / static_cast<double>(ok);
    if (baseline) report.mean_error_variance_pct = var_sum / static_cast<double>(ok);
  }
  return report;
}

/// Parses `lat,lon,sqm` sample files.
inline std::vector<SamplePoint> read_samples_csv(std::string_view bytes) {
  const auto rows = csv::lines(bytes);
  if (rows.empty()) throw Error(ErrorCode::EmptyFile, "sample file is empty");
  const auto header = csv::fields(rows.front().text);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[std::string(csv::trim(header[i]))] = i;
  if (!col.count("lat") || !col.count("lon") || !col.count("sqm")) {
    throw Error(ErrorCode::MalformedHeader, "sample header must contain lat,lon,sqm");
  }
  std::vector<SamplePoint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto f = csv::fields(rows[r].text);
    auto get = [&](const char* name) -> std::optional<double> {
      const std::size_t c = col[name];
      return c < f.size() ? csv::to_double(f[c]) : std::nullopt;
    };
    const auto lat = get("lat"), lon = get("lon"), sqm = get("sqm");
    if (!lat || !lon || !sqm || !GeoPoint{*lat, *lon}.valid() || !std::isfinite(*sqm)) {
      throw Error(ErrorCode::InvalidArgument,
                  "bad sample on line " + std::to_string(rows[r].number));
    }
    out.push_back({{*lat, *lon}, *sqm});
  }
  return out;
}

}  // namespace lightfield

#endif  // LIGHTFIELD_INTERPOLATION_HPP
