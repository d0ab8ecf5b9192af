// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_STABILITY_HPP
#define ESPKIT_STABILITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "espkit/metrics.hpp"
#include "espkit/problems.hpp"
#include "espkit/solver.hpp"

namespace esp {

/// One leave-one-out trial of the stability inequality
///   sqrt(mu'_x |xh - xh_i|^2 + mu'_y |yh - yh_i|^2)
///     <= (1/n) sqrt((l_x(xi_i, yh_i)+l_x(xi'_i, yh))^2/mu'_x + (...)/mu'_y)
/// with mu' = mu + nu. lhs/rhs in the problem's norms.
struct StabilityTrial {
  double lhs = 0.0;
  double rhs = 0.0;
  int swapped_index = 0;
  bool valid = true;
  std::string invalid_reason;

  bool passes(double slack) const { return !valid || lhs <= rhs + slack; }
};

/// Norm system the inequality is evaluated in. Moduli, norms and the
/// per-sample Lipschitz values must match: native problem norms for the
/// unregularized/entropy cases, L2 everywhere when a quadratic regularizer
/// supplies the strong convexity.
enum class StabilityGeometry { kProblemNorms, kEuclidean };

/// Solves the (regularized) empirical problem on a sample set and on its
/// i-th leave-one-out perturbation with identical solver settings, then
/// evaluates both sides of the stability inequality with the family's
/// analytic per-sample Lipschitz values.
StabilityTrial run_loo_trial(const ProblemPtr& problem, int n,
                             const Regularizer& reg, int i, std::uint64_t seed,
                             const SolverConfig& cfg,
                             StabilityGeometry geometry = StabilityGeometry::kProblemNorms);

struct ArgmapLipschitzReport {
  int pairs_checked = 0;
  int violations = 0;
  int skipped = 0;
  double max_ratio_x = 0.0;  // |x*(y1)-x*(y2)| / |y1-y2|
  double max_ratio_y = 0.0;  // |y*(x1)-y*(x2)| / |x1-x2|
  double bound_x = 0.0;      // L_xy / mu_x
  double bound_y = 0.0;      // L_xy / mu_y
};

/// Samples point pairs and checks the best-response maps of the population
/// objective against their Lipschitz bounds (slack 1e-6, minimum pair
/// separation 1e-6).
ArgmapLipschitzReport check_argmap_lipschitz(const ProblemPtr& problem, int pairs,
                                             std::uint64_t seed,
                                             const SolverConfig& cfg);

struct DistanceBoundReport {
  int replications = 0;
  int violations_x = 0;  // |xh - x*|^2 > (4/mu_x^2) |grad_x(x*, y*_n(x*))|^2
  int violations_y = 0;
  double mean_grad_x_sq = 0.0;  // E |grad_x Phi_n(x*, y*_n(x*))|^2
  double mean_grad_y_sq = 0.0;
  double se_grad_x_sq = 0.0;
  double se_grad_y_sq = 0.0;
  double bound_grad_x_sq = 0.0;  // second-moment right sides
  double bound_grad_y_sq = 0.0;
  double mean_grad_x_at_saddle_sq = 0.0;  // E |grad_x Phi_n(x*, y*)|^2
  double variance_identity_rhs = 0.0;     // (1/n) E |grad_x Phi_xi(x*, y*)|^2
};

/// Verifies the distance bounds and the gradient second-moment inequalities
/// on an unconstrained quadratic instance, solved in closed form.
DistanceBoundReport check_distance_bounds(const ProblemPtr& problem, int n,
                                         int replications, std::uint64_t seed,
                                         int threads = 0);

struct SmoothnessReport {
  int pairs_checked = 0;
  int violations = 0;
  int skipped = 0;
  double max_ratio_primal = 0.0;
  double max_ratio_dual = 0.0;
  double bound_primal = 0.0;  // L_f = L_x + L_xy^2 / mu_y
  double bound_dual = 0.0;    // L_g = L_y + L_xy^2 / mu_x
};

/// Finite-difference check that grad f (f(x) = max_y Phi(x,y)) is
/// L_f-Lipschitz, and the mirrored dual check.
SmoothnessReport check_primal_smoothness(const ProblemPtr& problem, int pairs,
                                         std::uint64_t seed,
                                         const SolverConfig& cfg);

}  // namespace esp

#endif  // ESPKIT_STABILITY_HPP
