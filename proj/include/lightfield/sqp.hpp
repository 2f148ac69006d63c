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

#ifndef LIGHTFIELD_SQP_HPP
#define LIGHTFIELD_SQP_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lightfield/error.hpp"

namespace lightfield::opt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct QpResult {
  Vector x;
  Vector multipliers;  // one per constraint column, zero when inactive
  bool feasible = false;
};

/// Strictly convex QP by the Goldfarb-Idnani dual active-set method:
///   min 1/2 x'Gx + g'x  subject to  A'x + b >= 0  (one constraint per column of A).
/// G must be positive definite. The active-set projections are rebuilt from
/// scratch each step, which is fine for the dozens of variables used here.
inline QpResult solve_qp(const Matrix& G, const Vector& g, const Matrix& A, const Vector& b) {
  const Eigen::Index n = G.rows();
  const Eigen::Index m = A.cols();
  Eigen::LLT<Matrix> chol(G);
  if (chol.info() != Eigen::Success) throw Error(ErrorCode::LinAlgFailure, "QP Hessian is not positive definite");
  const Matrix Ginv = chol.solve(Matrix::Identity(n, n));

  QpResult out{-Ginv * g, Vector::Zero(m), false};
  Vector& x = out.x;
  std::vector<Eigen::Index> active;
  std::vector<double> u;  // multipliers of `active`

  auto max_abs = [](const auto& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; };
  const double scale = 1.0 + max_abs(A) + max_abs(b) + max_abs(g);
  const double eps = 1e-12 * scale;
  const int max_steps = static_cast<int>(20 * (n + m) + 100);

  auto projections = [&](Matrix& H, Matrix& Nstar) {
    const auto q = static_cast<Eigen::Index>(active.size());
    if (q == 0) {
      H = Ginv;
      Nstar.resize(0, n);
      return;
    }
    Matrix N(n, q);
    for (Eigen::Index k = 0; k < q; ++k) N.col(k) = A.col(active[k]);
    const Matrix GN = Ginv * N;
    Eigen::LDLT<Matrix> M(N.transpose() * GN);
    Nstar = M.solve(GN.transpose());
    H = Ginv - GN * Nstar;
  };

  int steps = 0;
  while (true) {
    if (m == 0) break;
    const Vector s = A.transpose() * x + b;
    Eigen::Index p = -1;
    double worst = -eps;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      if (s(j) < worst) {
        worst = s(j);
        p = j;
      }
    }
    if (p < 0) break;

    double u_p = 0.0;
    while (true) {
      if (++steps > max_steps) throw Error(ErrorCode::LinAlgFailure, "QP active-set iteration limit");
      Matrix H, Nstar;
      projections(H, Nstar);
      const Vector np = A.col(p);
      const Vector z = H * np;
      const Vector r = Nstar.rows() > 0 ? Vector(Nstar * np) : Vector();

      double t1 = std::numeric_limits<double>::infinity();
      std::size_t drop = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (r(static_cast<Eigen::Index>(k)) > 1e-14 && u[k] / r(static_cast<Eigen::Index>(k)) < t1) {
          t1 = u[k] / r(static_cast<Eigen::Index>(k));
          drop = k;
        }
      }
      const double zn = z.dot(np);
      const double sp = np.dot(x) + b(p);
      const double t2 = (z.norm() > 1e-13 * (1.0 + np.norm()) && zn > 0.0)
                            ? -sp / zn
                            : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return out;  // linearized constraints are inconsistent

      for (std::size_t k = 0; k < active.size(); ++k) u[k] -= t * r(static_cast<Eigen::Index>(k));
      u_p += t;
      if (std::isfinite(t2)) x += t * z;

      if (t == t2) {
        active.push_back(p);
        u.push_back(u_p);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
  for (std::size_t k = 0; k < active.size(); ++k) out.multipliers(active[k]) = std::max(0.0, u[k]);
  out.feasible = true;
  return out;
}

/// Smooth minimization problem with inequality constraints written as
/// `constraint(x) <= 0`, plus simple bounds.
struct Problem {
  std::function<double(const Vector&)> objective;
  std::vector<std::function<double(const Vector&)>> constraints;
  Vector lower;  // may hold -inf
  Vector upper;  // may hold +inf
  Vector scale;  // typical magnitude per variable; defaults to 1
  /// Optional map onto the feasible set, used by the projected-gradient fallback.
  std::function<Vector(const Vector&)> project;
};

struct Options {
  int max_iters = 200;
  double tolerance = 1e-8;      // step / stationarity tolerance in scaled variables
  double feasibility_tol = 1e-9;
  double fd_step = 1e-6;        // relative central-difference step
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double step_norm = 0.0;
};

struct Result {
  Vector x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
  std::string status;
  std::vector<TraceEntry> trace;
};

namespace detail {

// Problem expressed in scaled variables xi = x / scale.
class Scaled {
 public:
  explicit Scaled(const Problem& p) : p_(p) {
    const auto n = p.lower.size();
    scale_ = p.scale.size() == n ? p.scale : Vector::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(scale_(i) > 0.0)) scale_(i) = 1.0;
    }
  }

  Eigen::Index n() const { return scale_.size(); }
  std::size_t m() const { return p_.constraints.size(); }
  Vector to_x(const Vector& xi) const { return xi.cwiseProduct(scale_); }
  Vector to_xi(const Vector& x) const { return x.cwiseQuotient(scale_); }
  double lower(Eigen::Index i) const { return p_.lower(i) / scale_(i); }
  double upper(Eigen::Index i) const { return p_.upper(i) / scale_(i); }

  double f(const Vector& xi) const { return p_.objective(to_x(xi)); }
  // Constraint values in the solver's c(xi) >= 0 convention.
  Vector c(const Vector& xi) const {
    Vector out(static_cast<Eigen::Index>(m()));
    const Vector x = to_x(xi);
    for (std::size_t j = 0; j < m(); ++j) out(static_cast<Eigen::Index>(j)) = -p_.constraints[j](x);
    return out;
  }

  double violation(const Vector& xi) const {
    double v = 0.0;
    const Vector cv = c(xi);
    for (Eigen::Index j = 0; j < cv.size(); ++j) v = std::max(v, -cv(j));
    for (Eigen::Index i = 0; i < n(); ++i) {
      v = std::max({v, lower(i) - xi(i), xi(i) - upper(i)});
    }
    return v;
  }

  double l1_violation(const Vector& xi) const {
    double v = 0.0;
    const Vector cv = c(xi);
    for (Eigen::Index j = 0; j < cv.size(); ++j) v += std::max(0.0, -cv(j));
    return v;
  }

  // Central differences; the step is relative to max(1, |xi_i|).
  void gradients(const Vector& xi, double h, Vector& grad_f, Matrix& jac_c) const {
    grad_f.resize(n());
    jac_c.resize(n(), static_cast<Eigen::Index>(m()));
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double step = h * std::max(1.0, std::abs(xi(i)));
      Vector a = xi, b = xi;
      a(i) += step;
      b(i) -= step;
      grad_f(i) = (f(a) - f(b)) / (2.0 * step);
      jac_c.row(i) = (c(a) - c(b)).transpose() / (2.0 * step);
    }
  }

  Vector clamp(Vector xi) const {
    for (Eigen::Index i = 0; i < n(); ++i) xi(i) = std::clamp(xi(i), lower(i), upper(i));
    return xi;
  }

  Vector project(const Vector& xi) const {
    if (p_.project) return clamp(to_xi(p_.project(to_x(xi))));
    return clamp(xi);
  }

 private:
  const Problem& p_;
  Vector scale_;
};

}  // namespace detail

/// Sequential quadratic programming with a damped BFGS Hessian and an L1
/// merit line search. QP failures drop to projected gradient descent with
/// backtracking. Returns the best feasible iterate seen.
inline Result minimize(const Problem& problem, const Vector& x0, const Options& opt = {}) {
  const detail::Scaled P(problem);
  const Eigen::Index n = P.n();
  const auto m = static_cast<Eigen::Index>(P.m());
  if (x0.size() != n || problem.upper.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "variable/bound dimension mismatch");
  }

  Result res;
  Vector xi = P.clamp(P.to_xi(x0));
  double fx = P.f(xi);
  Vector cx = P.c(xi);
  Vector grad, grad_new;
  Matrix jac, jac_new;
  P.gradients(xi, opt.fd_step, grad, jac);
  Matrix B = Matrix::Identity(n, n);
  double mu = 1.0;

  std::optional<Vector> best;
  double best_f = std::numeric_limits<double>::infinity();
  auto remember = [&](const Vector& v, double fv) {
    if (P.violation(v) <= opt.feasibility_tol && fv < best_f) {
      best = v;
      best_f = fv;
    }
  };
  remember(xi, fx);

  // Bounds enter the QP as extra linear rows.
  std::vector<std::pair<Eigen::Index, int>> bound_rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(P.lower(i))) bound_rows.push_back({i, +1});
    if (std::isfinite(P.upper(i))) bound_rows.push_back({i, -1});
  }
  const auto nb = static_cast<Eigen::Index>(bound_rows.size());

  auto merit = [&](const Vector& v, double fv) { return fv + mu * P.l1_violation(v); };

  auto projected_gradient = [&](int iter) {
    res.used_fallback = true;
    double step = 1.0;
    const double f0 = fx;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const Vector trial = P.project(xi - step * grad);
      const double ft = P.f(trial);
      if (ft < f0 - 1e-4 * grad.dot(xi - trial)) {
        res.trace.push_back({iter, ft, P.violation(trial), f0, ft, (trial - xi).norm()});
        xi = trial;
        fx = ft;
        return true;
      }
    }
    return false;
  };

  int iter = 0;
  for (; iter < opt.max_iters; ++iter) {
    // QP subproblem: min 1/2 p'Bp + grad'p  s.t.  jac'p + c >= 0, bounds.
    Matrix A(n, m + nb);
    Vector b(m + nb);
    A.leftCols(m) = jac;
    b.head(m) = cx;
    for (Eigen::Index k = 0; k < nb; ++k) {
      const auto [i, sign] = bound_rows[static_cast<std::size_t>(k)];
      A.col(m + k).setZero();
      A(i, m + k) = sign;
      b(m + k) = sign > 0 ? xi(i) - P.lower(i) : P.upper(i) - xi(i);
    }
    QpResult qp;
    bool qp_ok = true;
    try {
      qp = solve_qp(B, grad, A, b);
      qp_ok = qp.feasible && qp.x.allFinite();
    } catch (const Error&) {
      qp_ok = false;
    }
    if (!qp_ok) {
      if (!projected_gradient(iter)) {
        res.status = "projected-gradient fallback stalled";
        break;
      }
      P.gradients(xi, opt.fd_step, grad, jac);
      cx = P.c(xi);
      remember(xi, fx);
      B = Matrix::Identity(n, n);
      continue;
    }

    const Vector p = qp.x;
    const Vector lambda = qp.multipliers.head(m);
    const double pnorm = p.lpNorm<Eigen::Infinity>();
    if (m > 0) mu = std::max(mu, 1.5 * lambda.lpNorm<Eigen::Infinity>() + 1e-3);

    if (pnorm <= opt.tolerance && P.violation(xi) <= opt.feasibility_tol) {
      res.converged = true;
      res.status = "converged: step below tolerance";
      break;
    }

    // Armijo backtracking on the L1 merit, with one second-order correction
    // attempt when the full step is rejected.
    const double phi0 = merit(xi, fx);
    const double dphi = grad.dot(p) - mu * P.l1_violation(xi);
    double alpha = 1.0;
    Vector trial;
    double ft = 0.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, alpha *= 0.5) {
      trial = P.clamp(xi + alpha * p);
      ft = P.f(trial);
      if (merit(trial, ft) <= phi0 + 1e-4 * alpha * std::min(dphi, 0.0)) {
        accepted = true;
        break;
      }
      if (k == 0 && m > 0) {
        // Minimal-norm correction pulling the violated linearizations back.
        const Vector ct = P.c(trial);
        std::vector<Eigen::Index> act;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (lambda(j) > 0.0 || ct(j) < 0.0) act.push_back(j);
        }
        if (!act.empty()) {
          Matrix J(n, static_cast<Eigen::Index>(act.size()));
          Vector r(static_cast<Eigen::Index>(act.size()));
          for (std::size_t a = 0; a < act.size(); ++a) {
            J.col(static_cast<Eigen::Index>(a)) = jac.col(act[a]);
            r(static_cast<Eigen::Index>(a)) = ct(act[a]);
          }
          const Vector q = -J * (J.transpose() * J).completeOrthogonalDecomposition().solve(r);
          const Vector soc = P.clamp(trial + q);
          const double fs = P.f(soc);
          if (soc.allFinite() && merit(soc, fs) <= phi0 + 1e-4 * std::min(dphi, 0.0)) {
            trial = soc;
            ft = fs;
            accepted = true;
            break;
          }
        }
      }
    }
    if (!accepted) {
      if (P.violation(xi) <= opt.feasibility_tol && pnorm <= 1e3 * opt.tolerance) {
        res.converged = true;
        res.status = "converged: no further merit decrease";
        break;
      }
      if (!projected_gradient(iter)) {
        res.converged = P.violation(xi) <= opt.feasibility_tol && pnorm <= 1e4 * opt.tolerance;
        res.status = "line search failed";
        break;
      }
      P.gradients(xi, opt.fd_step, grad, jac);
      cx = P.c(xi);
      remember(xi, fx);
      B = Matrix::Identity(n, n);
      continue;
    }

    const Vector s = trial - xi;
    const double phi1 = merit(trial, ft);
    P.gradients(trial, opt.fd_step, grad_new, jac_new);
    const Vector y = (grad_new - jac_new * lambda) - (grad - jac * lambda);

    // Powell-damped BFGS update keeps B positive definite.
    const Vector Bs = B * s;
    const double sBs = s.dot(Bs);
    if (sBs > 1e-300) {
      double sy = s.dot(y);
      Vector r = y;
      if (sy < 0.2 * sBs) {
        const double theta = 0.8 * sBs / (sBs - sy);
        r = theta * y + (1.0 - theta) * Bs;
        sy = s.dot(r);
      }
      if (sy > 1e-300) B += r * r.transpose() / sy - Bs * Bs.transpose() / sBs;
    }

    xi = trial;
    fx = ft;
    cx = P.c(xi);
    grad = grad_new;
    jac = jac_new;
    remember(xi, fx);
    res.trace.push_back({iter, fx, P.violation(xi), phi0, phi1, s.norm()});

    if (s.lpNorm<Eigen::Infinity>() <= opt.tolerance && P.violation(xi) <= opt.feasibility_tol) {
      res.converged = true;
      res.status = "converged: step below tolerance";
      ++iter;
      break;
    }
  }
  if (iter >= opt.max_iters && res.status.empty()) res.status = "iteration limit reached";

  res.iterations = iter;
  Vector final_xi = xi;
  if (best && (P.violation(xi) > opt.feasibility_tol || best_f < fx)) final_xi = *best;
  res.x = P.to_x(final_xi);
  res.objective = P.f(final_xi);
  res.max_violation = P.violation(final_xi);
  return res;
}

}  // namespace lightfield::opt

#endif  // LIGHTFIELD_SQP_HPP
