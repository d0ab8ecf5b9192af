// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_METRICS_HPP
#define ESPKIT_METRICS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "espkit/problems.hpp"
#include "espkit/solver.hpp"

namespace esp {

/// The three generalization measures. WGM puts the expectation over sample
/// sets inside the max/min; SGM is the expected population duality gap; D2
/// is the expected squared distance to the population saddle in the
/// problem's norms.
enum class MetricKind { kWgm, kSgm, kD2 };

std::string to_string(MetricKind kind);

struct GeneralizationEstimate {
  MetricKind metric = MetricKind::kWgm;
  int n = 0;
  int replications = 0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Per-replication values for SGM/D2. WGM has no per-replication
  /// decomposition (the expectation sits inside the max/min); its std_error
  /// is computed conditionally on the fitted maximizers.
  std::vector<double> per_rep;
};

/// Closed-form bound formulas, one per kind.
enum class BoundKind {
  kScscWgm,
  kScscSgm,
  kUnboundedD2,
  kUnboundedSgm,
  kRegularizedWgm,
  kDiameterWgm,
  kStabilityRhs,
  kStabilityRhsRegularized,
};

/// Regularizer applied to each empirical objective as a function of
/// (problem, n); an empty function means no regularization.
using RegularizerRule =
    std::function<Regularizer(const StochasticSaddleProblem&, int)>;

/// The quadratic regularizer with diameter-balanced coefficients
/// alpha = l^w / (sqrt(n) D), evaluated on the problem's L2 constants.
RegularizerRule diameter_regularizer_rule();

/// Population saddle: exact when the problem has one, otherwise the
/// population objective is solved to gap 1e-10.
std::pair<Vector, Vector> population_saddle(const ProblemPtr& problem,
                                            const SolverConfig& cfg);

struct EstimateOptions {
  SolverConfig solver;
  RegularizerRule regularizer;  // empty = none
  std::uint64_t master_seed = 0;
  int threads = 0;
};

/// Monte Carlo estimate of one metric over independent replications; each
/// replication draws fresh samples from (master_seed, r) and solves the
/// (regularized) empirical problem.
GeneralizationEstimate estimate_generalization(const ProblemPtr& problem, int n,
                                               int replications, MetricKind metric,
                                               const EstimateOptions& opts);

/// All requested metrics computed from one shared set of replication
/// solutions, so ordering checks compare like with like.
std::vector<GeneralizationEstimate> estimate_metrics(
    const ProblemPtr& problem, int n, int replications,
    const std::vector<MetricKind>& metrics, const EstimateOptions& opts);

/// Exact evaluation of the closed-form bound `kind` at sample size n.
/// Regularizer-dependent kinds read nu_x/nu_y/R from `reg`. The unbounded
/// kinds are order-of-magnitude envelopes evaluated with unit leading
/// constant.
double theoretical_bound(BoundKind kind, const ProblemConstants& constants,
                         const Regularizer& reg, int n);

}  // namespace esp

#endif  // ESPKIT_METRICS_HPP
