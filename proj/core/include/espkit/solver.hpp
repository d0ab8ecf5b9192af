// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_SOLVER_HPP
#define ESPKIT_SOLVER_HPP

#include <optional>

#include "espkit/problems.hpp"
#include "espkit/saddle_function.hpp"

namespace esp {

enum class StepRule { kFixed, kAdaptiveBacktracking };
enum class ProxGeometry { kEuclidean, kEntropy };

struct SolverConfig {
  int max_iter = 100000;
  /// Target certified duality gap; 0 selects 1e-8 * (1 + |f(x0, y0)|).
  double gap_tol = 0.0;
  StepRule step_rule = StepRule::kAdaptiveBacktracking;
  double fixed_step = 0.1;
  /// Geometry per block; unset = entropy on simplex-like sets, Euclidean
  /// elsewhere. Entropy is only valid on simplex-like sets.
  std::optional<ProxGeometry> geometry_x;
  std::optional<ProxGeometry> geometry_y;
  int gap_check_every = 100;
  std::optional<Vector> init_x;
  std::optional<Vector> init_y;
};

/// A candidate saddle pair with a certified empirical duality gap.
struct SaddleSolution {
  Vector x_hat;
  Vector y_hat;
  double certified_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

double resolve_gap_tol(const SaddleFunction& f, const SolverConfig& cfg);

/// Extragradient with Bregman prox steps. Handles composite entropy
/// regularizers inside the prox. Gap certificates come from best responses
/// at periodic checkpoints; the best certified iterate is returned, and the
/// best certified gap is non-increasing across checkpoints. Throws when the
/// gap diverges past 1e6x its initial value.
SaddleSolution solve_mirror_prox(const SaddleFunction& f, const SolverConfig& cfg);

/// Exact solution of an unconstrained quadratic-family objective (regularizer
/// none or quadratic-quadratic) through its stationarity linear system.
SaddleSolution solve_quadratic_closed_form(const EmpiricalObjective& objective);

/// Closed form when applicable, mirror-prox otherwise.
SaddleSolution solve_saddle(const EmpiricalObjective& objective,
                            const SolverConfig& cfg);

/// Exact optimizer of one block with the other fixed. Uses the function's
/// analytic best response when present, otherwise a proximal-gradient solve
/// to first-order tolerance (gradient mapping norm <= gap_tol/10).
BestResponse best_response(const SaddleFunction& f, const Vector& fixed, Side side,
                           const SolverConfig& cfg);

/// max_y' f(x, y') - min_x' f(x', y); zero exactly at a saddle point.
double empirical_duality_gap(const SaddleFunction& f, const Vector& x,
                             const Vector& y, const SolverConfig& cfg = {});

}  // namespace esp

#endif  // ESPKIT_SOLVER_HPP
