// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/stability.hpp"

#include <cmath>
#include <stdexcept>

#include "espkit/parallel.hpp"

namespace esp {

namespace {

constexpr double kPairSeparation = 1e-6;
constexpr double kRatioSlack = 1e-6;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Vector fd_primal_gradient(const PopulationObjective& pop, const Vector& x,
                          const SolverConfig& cfg, Side outer) {
  // Central differences of f(x) = max_y Phi(x, y) (or of g for the dual).
  const double h = 1e-5;
  const int d = static_cast<int>(x.size());
  Vector grad(d);
  for (int i = 0; i < d; ++i) {
    Vector hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    double f_hi, f_lo;
    if (outer == Side::kMinimizeX) {
      f_hi = best_response(pop, hi, Side::kMaximizeY, cfg).value;
      f_lo = best_response(pop, lo, Side::kMaximizeY, cfg).value;
    } else {
      f_hi = best_response(pop, hi, Side::kMinimizeX, cfg).value;
      f_lo = best_response(pop, lo, Side::kMinimizeX, cfg).value;
    }
    grad[i] = (f_hi - f_lo) / (2.0 * h);
  }
  return grad;
}

}  // namespace

StabilityTrial run_loo_trial(const ProblemPtr& problem, int n,
                             const Regularizer& reg, int i, std::uint64_t seed,
                             const SolverConfig& cfg, StabilityGeometry geometry) {
  require(n >= 1 && i >= 0 && i < n, "run_loo_trial: index out of range");
  const ProblemConstants& c = problem->constants();
  const double mx = c.mu_x + reg.nu_x();
  const double my = c.mu_y + reg.nu_y();
  require(mx > 0.0 && my > 0.0,
          "run_loo_trial: needs mu + nu positive in both blocks");

  const bool euclidean = geometry == StabilityGeometry::kEuclidean;
  const NormTag norm_x = euclidean ? NormTag::kEuclideanL2 : problem->norm_x();
  const NormTag norm_y = euclidean ? NormTag::kEuclideanL2 : problem->norm_y();

  const std::uint64_t sample_seed = Rng::stream(seed, 0)();
  SampleSet samples = problem->draw_samples(sample_seed, n);
  Rng replacement_rng = Rng::stream(seed, 1);
  SampleDatum replacement = problem->sample(replacement_rng);
  SampleSet swapped = leave_one_out_swap(samples, i, replacement);

  StabilityTrial trial;
  trial.swapped_index = i;

  const EmpiricalObjective base(problem, samples, reg);
  const EmpiricalObjective perturbed(problem, swapped, reg);
  const SaddleSolution sol = solve_saddle(base, cfg);
  const SaddleSolution sol_i = solve_saddle(perturbed, cfg);
  if (!sol.converged || !sol_i.converged) {
    trial.valid = false;
    trial.invalid_reason = "inner solve did not converge";
    return trial;
  }

  const double dx = norm_value(norm_x, sol.x_hat - sol_i.x_hat);
  const double dy = norm_value(norm_y, sol.y_hat - sol_i.y_hat);
  trial.lhs = std::sqrt(mx * dx * dx + my * dy * dy);

  const SampleDatum& original = samples.data[static_cast<std::size_t>(i)];
  auto lx = [&](const SampleDatum& d, const Vector& at) {
    return euclidean ? problem->sample_lipschitz_x_l2(d, at)
                     : problem->sample_lipschitz_x(d, at);
  };
  auto ly = [&](const SampleDatum& d, const Vector& at) {
    return euclidean ? problem->sample_lipschitz_y_l2(d, at)
                     : problem->sample_lipschitz_y(d, at);
  };
  const double lip_x = lx(original, sol_i.y_hat) + lx(replacement, sol.y_hat);
  const double lip_y = ly(original, sol_i.x_hat) + ly(replacement, sol.x_hat);
  trial.rhs =
      std::sqrt(lip_x * lip_x / mx + lip_y * lip_y / my) / static_cast<double>(n);
  return trial;
}

ArgmapLipschitzReport check_argmap_lipschitz(const ProblemPtr& problem, int pairs,
                                             std::uint64_t seed,
                                             const SolverConfig& cfg) {
  const ProblemConstants& c = problem->constants();
  require(c.mu_x > 0.0 && c.mu_y > 0.0,
          "check_argmap_lipschitz: needs SC-SC moduli");
  ArgmapLipschitzReport report;
  report.bound_x = c.grad_lip_xy / c.mu_x;
  report.bound_y = c.grad_lip_xy / c.mu_y;

  const PopulationObjective pop(problem);
  Rng rng(seed);
  for (int k = 0; k < pairs; ++k) {
    const Vector y1 = sample_point(problem->set_y(), rng);
    const Vector y2 = sample_point(problem->set_y(), rng);
    const Vector x1 = sample_point(problem->set_x(), rng);
    const Vector x2 = sample_point(problem->set_x(), rng);
    const double dy = norm_value(problem->norm_y(), y1 - y2);
    const double dx = norm_value(problem->norm_x(), x1 - x2);
    if (dy < kPairSeparation || dx < kPairSeparation) {
      ++report.skipped;
      continue;
    }
    ++report.pairs_checked;
    const Vector bx1 = best_response(pop, y1, Side::kMinimizeX, cfg).point;
    const Vector bx2 = best_response(pop, y2, Side::kMinimizeX, cfg).point;
    const double ratio_x = norm_value(problem->norm_x(), bx1 - bx2) / dy;
    report.max_ratio_x = std::max(report.max_ratio_x, ratio_x);
    if (ratio_x > report.bound_x + kRatioSlack) ++report.violations;

    const Vector by1 = best_response(pop, x1, Side::kMaximizeY, cfg).point;
    const Vector by2 = best_response(pop, x2, Side::kMaximizeY, cfg).point;
    const double ratio_y = norm_value(problem->norm_y(), by1 - by2) / dx;
    report.max_ratio_y = std::max(report.max_ratio_y, ratio_y);
    if (ratio_y > report.bound_y + kRatioSlack) ++report.violations;
  }
  return report;
}

DistanceBoundReport check_distance_bounds(const ProblemPtr& problem, int n,
                                         int replications, std::uint64_t seed,
                                         int threads) {
  require(problem->quadratic_model().has_value(),
          "check_distance_bounds: quadratic family only");
  require(!problem->set_x().bounded() && !problem->set_y().bounded(),
          "check_distance_bounds: requires unbounded sets");
  require(replications >= 2, "check_distance_bounds: needs >= 2 replications");
  const auto model = *problem->quadratic_model();
  const auto [x_star, y_star] = problem->population_saddle_point();

  struct Rep {
    double grad_x_sq, grad_y_sq, grad_x_at_saddle_sq;
    bool violation_x, violation_y;
  };
  std::vector<Rep> reps(static_cast<std::size_t>(replications));

  parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = Rng::stream(seed, r)();
    SampleSet samples = problem->draw_samples(rep_seed, n);
    const EmpiricalObjective obj(problem, std::move(samples), Regularizer::none());
    const SolverConfig cfg;

    const Vector y_n_star = best_response(obj, x_star, Side::kMaximizeY, cfg).point;
    const Vector x_n_star = best_response(obj, y_star, Side::kMinimizeX, cfg).point;
    const double gx_sq = obj.grad_x(x_star, y_n_star).squaredNorm();
    const double gy_sq = obj.grad_y(x_n_star, y_star).squaredNorm();

    const SaddleSolution sol = solve_quadratic_closed_form(obj);
    const double dist_x_sq = (sol.x_hat - x_star).squaredNorm();
    const double dist_y_sq = (sol.y_hat - y_star).squaredNorm();

    Rep rep;
    rep.grad_x_sq = gx_sq;
    rep.grad_y_sq = gy_sq;
    rep.grad_x_at_saddle_sq = obj.grad_x(x_star, y_star).squaredNorm();
    rep.violation_x =
        dist_x_sq > 4.0 / (model.mu_x * model.mu_x) * gx_sq + 1e-12;
    rep.violation_y =
        dist_y_sq > 4.0 / (model.mu_y * model.mu_y) * gy_sq + 1e-12;
    reps[r] = rep;
  });

  DistanceBoundReport report;
  report.replications = replications;
  double sum_x = 0.0, sum_y = 0.0, sum_sad = 0.0;
  for (const Rep& rep : reps) {
    report.violations_x += rep.violation_x ? 1 : 0;
    report.violations_y += rep.violation_y ? 1 : 0;
    sum_x += rep.grad_x_sq;
    sum_y += rep.grad_y_sq;
    sum_sad += rep.grad_x_at_saddle_sq;
  }
  report.mean_grad_x_sq = sum_x / replications;
  report.mean_grad_y_sq = sum_y / replications;
  report.mean_grad_x_at_saddle_sq = sum_sad / replications;
  double ss_x = 0.0, ss_y = 0.0;
  for (const Rep& rep : reps) {
    ss_x += (rep.grad_x_sq - report.mean_grad_x_sq) *
            (rep.grad_x_sq - report.mean_grad_x_sq);
    ss_y += (rep.grad_y_sq - report.mean_grad_y_sq) *
            (rep.grad_y_sq - report.mean_grad_y_sq);
  }
  report.se_grad_x_sq = std::sqrt(ss_x / (replications - 1.0)) /
                        std::sqrt(static_cast<double>(replications));
  report.se_grad_y_sq = std::sqrt(ss_y / (replications - 1.0)) /
                        std::sqrt(static_cast<double>(replications));

  const ProblemConstants& c = problem->constants();
  const double cx = c.grad_x_second_moment_opt;
  const double cy = c.grad_y_second_moment_opt;
  const double lxy = c.grad_lip_xy;
  report.bound_grad_x_sq =
      (8.0 * lxy * lxy / (model.mu_y * model.mu_y) * cy + 2.0 * cx) / n;
  report.bound_grad_y_sq =
      (8.0 * lxy * lxy / (model.mu_x * model.mu_x) * cx + 2.0 * cy) / n;
  report.variance_identity_rhs = cx / n;
  return report;
}

SmoothnessReport check_primal_smoothness(const ProblemPtr& problem, int pairs,
                                         std::uint64_t seed,
                                         const SolverConfig& cfg) {
  const ProblemConstants& c = problem->constants();
  require(c.mu_x > 0.0 && c.mu_y > 0.0,
          "check_primal_smoothness: needs SC-SC moduli");
  SmoothnessReport report;
  report.bound_primal = c.grad_lip_x + c.grad_lip_xy * c.grad_lip_xy / c.mu_y;
  report.bound_dual = c.grad_lip_y + c.grad_lip_xy * c.grad_lip_xy / c.mu_x;

  const PopulationObjective pop(problem);
  Rng rng(seed);
  for (int k = 0; k < pairs; ++k) {
    const Vector x1 = sample_point(problem->set_x(), rng);
    const Vector x2 = sample_point(problem->set_x(), rng);
    const Vector y1 = sample_point(problem->set_y(), rng);
    const Vector y2 = sample_point(problem->set_y(), rng);
    const double dx = (x1 - x2).norm();
    const double dy = (y1 - y2).norm();
    if (dx < kPairSeparation || dy < kPairSeparation) {
      ++report.skipped;
      continue;
    }
    ++report.pairs_checked;

    const Vector gf1 = fd_primal_gradient(pop, x1, cfg, Side::kMinimizeX);
    const Vector gf2 = fd_primal_gradient(pop, x2, cfg, Side::kMinimizeX);
    const double ratio_f = (gf1 - gf2).norm() / dx;
    report.max_ratio_primal = std::max(report.max_ratio_primal, ratio_f);
    if (ratio_f > report.bound_primal + kRatioSlack) ++report.violations;

    const Vector gg1 = fd_primal_gradient(pop, y1, cfg, Side::kMaximizeY);
    const Vector gg2 = fd_primal_gradient(pop, y2, cfg, Side::kMaximizeY);
    const double ratio_g = (gg1 - gg2).norm() / dy;
    report.max_ratio_dual = std::max(report.max_ratio_dual, ratio_g);
    if (ratio_g > report.bound_dual + kRatioSlack) ++report.violations;
  }
  return report;
}

}  // namespace esp
