// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_RATES_HPP
#define ESPKIT_RATES_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "espkit/metrics.hpp"

namespace esp {

struct RateRow {
  int n = 0;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;  // per-row substream seed, for reproduction
  double extra = std::numeric_limits<double>::quiet_NaN();
};

struct RateSweep {
  std::vector<RateRow> rows;
  std::string problem_tag;
  int replications = 0;
  std::uint64_t master_seed = 0;
  std::string extra_column;  // name of RateRow::extra when used, else empty
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
  int points_excluded = 0;
  bool degenerate = false;  // fewer than 2 usable points
};

/// OLS fit of log(value) against log(n); nonpositive values are excluded
/// and counted. Throws when fewer than two positive points remain.
RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Fit of a sweep's (n, mean) rows excluding means below `floor`
/// (solver-noise floor); degenerate instead of throwing when everything
/// is floored.
RateFit fit_sweep(const RateSweep& sweep, double floor = 0.0);

/// Bound column for a sweep row, given the regularizer in effect at n.
using BoundRule =
    std::function<double(const StochasticSaddleProblem&, const Regularizer&, int)>;

/// theoretical_bound(kind, problem.constants(), reg, n) as a BoundRule.
BoundRule bound_rule(BoundKind kind);
/// Same, on the problem's L2 constants (for the diameter-regularized sweep).
BoundRule bound_rule_l2(BoundKind kind);

struct SweepSpec {
  std::vector<int> n_grid;
  int replications = 200;
  MetricKind metric = MetricKind::kWgm;
  RegularizerRule regularizer;  // empty = none
  BoundRule bound;              // empty = bound column 0
  SolverConfig solver;
  std::uint64_t master_seed = 0;
  int threads = 0;
  std::string problem_tag;
};

/// One row per n: metric estimate plus the matching theoretical bound.
/// Fully reproducible from (spec, master_seed) regardless of thread count.
RateSweep run_rate_sweep(const ProblemPtr& problem, const SweepSpec& spec);

/// Multi-metric variant sharing replication solutions row by row; returns
/// one sweep per metric, in the order requested.
std::vector<RateSweep> run_rate_sweep_multi(const ProblemPtr& problem,
                                            const SweepSpec& spec,
                                            const std::vector<MetricKind>& metrics,
                                            const std::vector<BoundRule>& bounds);

}  // namespace esp

#endif  // ESPKIT_RATES_HPP
