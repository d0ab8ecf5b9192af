// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esp {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kMinStep = 1e-14;
constexpr double kMaxStep = 1e6;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

ProxGeometry default_geometry(const FeasibleSet& set) {
  return set.simplex_like() ? ProxGeometry::kEntropy : ProxGeometry::kEuclidean;
}

ProxGeometry resolve_geometry(const FeasibleSet& set,
                              const std::optional<ProxGeometry>& requested,
                              const char* block) {
  const ProxGeometry geom = requested.value_or(default_geometry(set));
  if (geom == ProxGeometry::kEntropy && !set.simplex_like())
    throw std::invalid_argument(std::string("solver: entropy geometry on ") + block +
                                " requires a simplex-like set");
  return geom;
}

/// One Bregman prox step of a block. `descent` moves against the gradient
/// (min block); ascent moves along it (max block). `entropy_coef` is the
/// composite entropy coefficient handled in closed form.
Vector prox_step(const FeasibleSet& set, ProxGeometry geom, const Vector& z,
                 const Vector& grad, double eta, double entropy_coef,
                 bool descent) {
  const double sign = descent ? -1.0 : 1.0;
  if (geom == ProxGeometry::kEuclidean) {
    return set.project(z + sign * eta * grad);
  }
  // Entropy geometry: multiplicative-weights update with the composite
  // entropy term folded in as a shrink factor on the log scale. On the
  // occupancy set the simplex update is followed by the exact KL projection
  // onto the marginal window, which together solve the constrained prox.
  Vector w(z.size());
  const double shrink = 1.0 + eta * entropy_coef;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    w[i] = (std::log(std::max(z[i], kLogFloor)) + sign * eta * grad[i]) / shrink;
  Vector out = (w.array() - w.maxCoeff()).exp();
  out /= out.sum();
  if (set.kind() == FeasibleSet::Kind::kOccupancy) out = set.project_entropy(out);
  return out;
}

struct GapTracker {
  Vector x, y;
  double gap = std::numeric_limits<double>::infinity();

  bool offer(const SaddleFunction& f, const Vector& cx, const Vector& cy,
             const SolverConfig& cfg, double* current_gap = nullptr) {
    const double g = empirical_duality_gap(f, cx, cy, cfg);
    if (current_gap) *current_gap = g;
    if (g < gap) {
      gap = g;
      x = cx;
      y = cy;
      return true;
    }
    return false;
  }
};

BestResponse fallback_best_response(const SaddleFunction& f, const Vector& fixed,
                                    Side side, const SolverConfig& cfg) {
  const FeasibleSet& set = side == Side::kMinimizeX ? f.set_x() : f.set_y();
  const CompositeEntropy comp = f.composite();
  const double entropy_coef =
      side == Side::kMinimizeX ? comp.coef_x : comp.coef_y;
  if (entropy_coef != 0.0)
    throw std::domain_error(
        "best_response: entropy-composite block without an analytic best "
        "response");

  // Projected gradient with backtracking on the block objective.
  auto value = [&](const Vector& z) {
    return side == Side::kMinimizeX ? f.value(z, fixed) : -f.value(fixed, z);
  };
  auto grad = [&](const Vector& z) {
    return side == Side::kMinimizeX ? f.grad_x(z, fixed)
                                    : Vector(-f.grad_y(fixed, z));
  };

  const double tol =
      std::max(1e-12, (cfg.gap_tol > 0.0 ? cfg.gap_tol : 1e-8) / 10.0);
  Vector z = set.center();
  double fz = value(z);
  double eta = 1.0;
  double gm_norm = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < std::max(cfg.max_iter, 1000); ++iter) {
    const Vector g = grad(z);
    Vector znew;
    double fnew = 0.0;
    for (;;) {
      znew = set.project(z - eta * g);
      const Vector d = znew - z;
      fnew = value(znew);
      if (fnew <= fz + g.dot(d) + d.squaredNorm() / (2.0 * eta) + 1e-15) break;
      eta *= 0.5;
      if (eta < kMinStep)
        throw std::runtime_error("best_response: step collapse in backtracking");
    }
    gm_norm = (znew - z).norm() / eta;
    z = std::move(znew);
    fz = fnew;
    if (gm_norm <= tol) {
      BestResponse br;
      br.point = z;
      br.value = side == Side::kMinimizeX ? fz : -fz;
      return br;
    }
    eta = std::min(eta * 1.1, kMaxStep);
  }
  std::ostringstream msg;
  msg << "best_response: no convergence, final gradient-mapping norm " << gm_norm;
  throw std::runtime_error(msg.str());
}

}  // namespace

double resolve_gap_tol(const SaddleFunction& f, const SolverConfig& cfg) {
  if (cfg.gap_tol > 0.0) return cfg.gap_tol;
  const Vector x0 = cfg.init_x.value_or(f.set_x().center());
  const Vector y0 = cfg.init_y.value_or(f.set_y().center());
  return 1e-8 * (1.0 + std::abs(f.value(x0, y0)));
}

BestResponse best_response(const SaddleFunction& f, const Vector& fixed, Side side,
                           const SolverConfig& cfg) {
  if (auto exact = f.exact_best_response(side, fixed)) return *exact;
  return fallback_best_response(f, fixed, side, cfg);
}

double empirical_duality_gap(const SaddleFunction& f, const Vector& x,
                             const Vector& y, const SolverConfig& cfg) {
  require(f.set_x().contains(x, 1e-7), "empirical_duality_gap: x not feasible");
  require(f.set_y().contains(y, 1e-7), "empirical_duality_gap: y not feasible");
  const BestResponse up = best_response(f, x, Side::kMaximizeY, cfg);
  const BestResponse low = best_response(f, y, Side::kMinimizeX, cfg);
  return up.value - low.value;
}

SaddleSolution solve_mirror_prox(const SaddleFunction& f, const SolverConfig& cfg) {
  const FeasibleSet& sx = f.set_x();
  const FeasibleSet& sy = f.set_y();
  const ProxGeometry gx = resolve_geometry(sx, cfg.geometry_x, "x");
  const ProxGeometry gy = resolve_geometry(sy, cfg.geometry_y, "y");
  const CompositeEntropy comp = f.composite();

  Vector x = cfg.init_x.value_or(sx.center());
  Vector y = cfg.init_y.value_or(sy.center());
  require(sx.contains(x, 1e-9), "solve_mirror_prox: init_x not feasible");
  require(sy.contains(y, 1e-9), "solve_mirror_prox: init_y not feasible");

  const double gap_tol = resolve_gap_tol(f, cfg);
  const bool adaptive = cfg.step_rule == StepRule::kAdaptiveBacktracking;
  double eta = adaptive ? 1.0 : cfg.fixed_step;
  require(eta > 0.0, "solve_mirror_prox: step size must be positive");

  GapTracker best;
  double initial_gap = 0.0;
  best.offer(f, x, y, cfg, &initial_gap);
  if (best.gap <= gap_tol)
    return {best.x, best.y, best.gap, 0, true};

  Vector wx_sum = Vector::Zero(sx.dim());
  Vector wy_sum = Vector::Zero(sy.dim());
  int avg_count = 0;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const Vector gx0 = f.grad_x(x, y);
    const Vector gy0 = f.grad_y(x, y);

    Vector wx, wy, gwx, gwy;
    for (;;) {
      wx = prox_step(sx, gx, x, gx0, eta, comp.coef_x, /*descent=*/true);
      wy = prox_step(sy, gy, y, gy0, eta, comp.coef_y, /*descent=*/false);
      gwx = f.grad_x(wx, wy);
      gwy = f.grad_y(wx, wy);
      if (!adaptive) break;
      const double gdiff2 = (gwx - gx0).squaredNorm() + (gwy - gy0).squaredNorm();
      const double zdiff2 = (wx - x).squaredNorm() + (wy - y).squaredNorm();
      if (zdiff2 == 0.0 || eta * eta * gdiff2 <= 0.81 * zdiff2) break;
      eta *= 0.5;
      if (eta < kMinStep)
        throw std::runtime_error("solve_mirror_prox: step size collapsed");
    }

    x = prox_step(sx, gx, x, gwx, eta, comp.coef_x, true);
    y = prox_step(sy, gy, y, gwy, eta, comp.coef_y, false);
    if (adaptive) eta = std::min(eta * 1.05, kMaxStep);

    wx_sum += wx;
    wy_sum += wy;
    ++avg_count;

    if (iter % cfg.gap_check_every == 0 || iter == cfg.max_iter) {
      double current_gap = 0.0;
      best.offer(f, wx, wy, cfg, &current_gap);
      best.offer(f, wx_sum / avg_count, wy_sum / avg_count, cfg);
      if (best.gap <= gap_tol) return {best.x, best.y, best.gap, iter, true};
      // written so a NaN gap also counts as divergence
      if (!(current_gap <= 1e6 * (initial_gap + 1e-12))) {
        std::ostringstream msg;
        msg << "solve_mirror_prox: divergence, gap " << current_gap
            << " vs initial " << initial_gap;
        throw std::runtime_error(msg.str());
      }
    }
  }
  return {best.x, best.y, best.gap, cfg.max_iter, false};
}

SaddleSolution solve_quadratic_closed_form(const EmpiricalObjective& objective) {
  const auto model = objective.problem().quadratic_model();
  if (!model)
    throw std::domain_error("solve_quadratic_closed_form: quadratic family only");
  if (objective.set_x().bounded() || objective.set_y().bounded())
    throw std::domain_error("solve_quadratic_closed_form: requires unbounded sets");
  const Regularizer& reg = objective.regularizer();
  if (reg.kind() != Regularizer::Kind::kNone &&
      reg.kind() != Regularizer::Kind::kQuadraticQuadratic)
    throw std::domain_error(
        "solve_quadratic_closed_form: regularizer must be none or "
        "quadratic-quadratic");

  const double mx = model->mu_x + reg.alpha_x();
  const double my = model->mu_y + reg.alpha_y();
  if (mx <= 0.0 || my <= 0.0)
    throw std::domain_error("solve_quadratic_closed_form: singular block modulus");

  const auto& agg = std::get<QuadraticAggregate>(objective.aggregate());
  const Matrix& c = *model->coupling;
  const int dx = static_cast<int>(agg.a.size());
  const Matrix lhs = mx * Matrix::Identity(dx, dx) + c * c.transpose() / my;
  const Vector rhs = agg.a - c * agg.b / my;
  const Vector x = lhs.ldlt().solve(rhs);
  const double residual = (lhs * x - rhs).norm();
  if (residual > 1e-10 * (1.0 + rhs.norm())) {
    std::ostringstream msg;
    msg << "solve_quadratic_closed_form: linear solve residual " << residual;
    throw std::runtime_error(msg.str());
  }
  const Vector y = (agg.b + c.transpose() * x) / my;

  SaddleSolution sol;
  sol.certified_gap = empirical_duality_gap(objective, x, y);
  sol.x_hat = x;
  sol.y_hat = y;
  sol.iterations = 0;
  sol.converged = true;
  return sol;
}

SaddleSolution solve_saddle(const EmpiricalObjective& objective,
                            const SolverConfig& cfg) {
  const bool closed_form_ok =
      objective.problem().quadratic_model().has_value() &&
      !objective.set_x().bounded() && !objective.set_y().bounded() &&
      (objective.regularizer().kind() == Regularizer::Kind::kNone ||
       objective.regularizer().kind() == Regularizer::Kind::kQuadraticQuadratic);
  if (closed_form_ok) return solve_quadratic_closed_form(objective);
  return solve_mirror_prox(objective, cfg);
}

}  // namespace esp
