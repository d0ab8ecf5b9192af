// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/rates.hpp"

#include <cmath>
#include <stdexcept>

namespace esp {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

RateFit fit_or_degenerate(const std::vector<std::pair<double, double>>& points,
                          int pre_excluded, bool allow_degenerate) {
  std::vector<double> lx, ly;
  int excluded = pre_excluded;
  for (const auto& [n, v] : points) {
    if (v > 0.0 && n > 0.0) {
      lx.push_back(std::log(n));
      ly.push_back(std::log(v));
    } else {
      ++excluded;
    }
  }
  RateFit fit;
  fit.points_used = static_cast<int>(lx.size());
  fit.points_excluded = excluded;
  if (lx.size() < 2) {
    if (!allow_degenerate)
      throw std::invalid_argument(
          "fit_loglog_slope: needs >= 2 points with positive values");
    fit.degenerate = true;
    return fit;
  }
  const double m = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mean_x = sx / m;
  const double mean_y = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double dx = lx[i] - mean_x;
    const double dy = ly[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, "fit_loglog_slope: degenerate abscissa (repeated n)");
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
      ss_res += r * r;
    }
    fit.r_squared = std::max(0.0, 1.0 - ss_res / syy);
  } else {
    fit.r_squared = 1.0;  // constant values fit exactly with slope 0
  }
  return fit;
}

}  // namespace

RateFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  return fit_or_degenerate(points, 0, /*allow_degenerate=*/false);
}

RateFit fit_sweep(const RateSweep& sweep, double floor) {
  std::vector<std::pair<double, double>> points;
  int floored = 0;
  for (const RateRow& row : sweep.rows) {
    if (row.mean < floor) {
      ++floored;
      continue;
    }
    points.emplace_back(static_cast<double>(row.n), row.mean);
  }
  return fit_or_degenerate(points, floored, /*allow_degenerate=*/true);
}

BoundRule bound_rule(BoundKind kind) {
  return [kind](const StochasticSaddleProblem& problem, const Regularizer& reg,
                int n) {
    return theoretical_bound(kind, problem.constants(), reg, n);
  };
}

BoundRule bound_rule_l2(BoundKind kind) {
  return [kind](const StochasticSaddleProblem& problem, const Regularizer& reg,
                int n) {
    return theoretical_bound(kind, problem.constants_l2(), reg, n);
  };
}

std::vector<RateSweep> run_rate_sweep_multi(const ProblemPtr& problem,
                                            const SweepSpec& spec,
                                            const std::vector<MetricKind>& metrics,
                                            const std::vector<BoundRule>& bounds) {
  require(!spec.n_grid.empty(), "run_rate_sweep: empty n grid");
  require(metrics.size() == bounds.size(),
          "run_rate_sweep: one bound rule per metric required");
  for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
    require(spec.n_grid[i] > spec.n_grid[i - 1],
            "run_rate_sweep: n grid must be strictly increasing");

  std::vector<RateSweep> sweeps(metrics.size());
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    sweeps[m].problem_tag = spec.problem_tag;
    sweeps[m].replications = spec.replications;
    sweeps[m].master_seed = spec.master_seed;
  }

  EstimateOptions opts;
  opts.solver = spec.solver;
  opts.regularizer = spec.regularizer;
  opts.master_seed = spec.master_seed;
  opts.threads = spec.threads;

  for (const int n : spec.n_grid) {
    const std::vector<GeneralizationEstimate> estimates =
        estimate_metrics(problem, n, spec.replications, metrics, opts);
    const Regularizer reg =
        spec.regularizer ? spec.regularizer(*problem, n) : Regularizer::none();
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      RateRow row;
      row.n = n;
      row.metric = to_string(metrics[m]);
      row.mean = estimates[m].mean;
      row.std_error = estimates[m].std_error;
      row.bound = bounds[m] ? bounds[m](*problem, reg, n) : 0.0;
      row.replications = spec.replications;
      row.seed = Rng::stream(spec.master_seed, static_cast<std::uint64_t>(n))();
      sweeps[m].rows.push_back(std::move(row));
    }
  }
  return sweeps;
}

RateSweep run_rate_sweep(const ProblemPtr& problem, const SweepSpec& spec) {
  return run_rate_sweep_multi(problem, spec, {spec.metric}, {spec.bound}).front();
}

}  // namespace esp
