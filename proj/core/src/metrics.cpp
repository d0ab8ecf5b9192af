// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "espkit/parallel.hpp"
#include "espkit/rng.hpp"

namespace esp {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  MeanSe out;
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

}  // namespace

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::kWgm: return "wgm";
    case MetricKind::kSgm: return "sgm";
    case MetricKind::kD2: return "d2";
  }
  return "?";
}

RegularizerRule diameter_regularizer_rule() {
  return [](const StochasticSaddleProblem& problem, int n) {
    return diameter_regularizer(problem.constants_l2(), n);
  };
}

std::pair<Vector, Vector> population_saddle(const ProblemPtr& problem,
                                            const SolverConfig& cfg) {
  if (problem->has_population_saddle()) return problem->population_saddle_point();
  PopulationObjective pop(problem);
  SolverConfig tight = cfg;
  if (tight.gap_tol <= 0.0) tight.gap_tol = 1e-10;
  const SaddleSolution sol = solve_mirror_prox(pop, tight);
  if (sol.certified_gap > 1e-8) {
    std::ostringstream msg;
    msg << "population_saddle: only reached population gap " << sol.certified_gap;
    throw std::runtime_error(msg.str());
  }
  return {sol.x_hat, sol.y_hat};
}

std::vector<GeneralizationEstimate> estimate_metrics(
    const ProblemPtr& problem, int n, int replications,
    const std::vector<MetricKind>& metrics, const EstimateOptions& opts) {
  require(n >= 1, "estimate_metrics: n must be >= 1");
  require(replications >= 2, "estimate_metrics: needs >= 2 replications");
  require(!metrics.empty(), "estimate_metrics: no metrics requested");

  // Solve every replication once; all metrics share the solutions.
  std::vector<Vector> xs(static_cast<std::size_t>(replications));
  std::vector<Vector> ys(static_cast<std::size_t>(replications));
  parallel_for(static_cast<std::size_t>(replications), opts.threads,
               [&](std::size_t r) {
                 const std::uint64_t seed =
                     Rng::stream(opts.master_seed, static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(r))();
                 SampleSet samples = problem->draw_samples(seed, n);
                 const Regularizer reg = opts.regularizer
                                             ? opts.regularizer(*problem, n)
                                             : Regularizer::none();
                 const EmpiricalObjective objective(problem, std::move(samples),
                                                    reg);
                 SaddleSolution sol = solve_saddle(objective, opts.solver);
                 if (!sol.converged) {
                   std::ostringstream msg;
                   msg << "estimate_metrics: replication " << r
                       << " did not converge (gap " << sol.certified_gap << ")";
                   throw std::runtime_error(msg.str());
                 }
                 xs[r] = std::move(sol.x_hat);
                 ys[r] = std::move(sol.y_hat);
               });

  const PopulationObjective pop(problem);
  std::vector<GeneralizationEstimate> out;
  out.reserve(metrics.size());

  for (const MetricKind metric : metrics) {
    GeneralizationEstimate est;
    est.metric = metric;
    est.n = n;
    est.replications = replications;

    switch (metric) {
      case MetricKind::kD2: {
        const auto [x_star, y_star] = population_saddle(problem, opts.solver);
        est.per_rep.resize(xs.size());
        for (std::size_t r = 0; r < xs.size(); ++r) {
          const double dx = norm_value(problem->norm_x(), xs[r] - x_star);
          const double dy = norm_value(problem->norm_y(), ys[r] - y_star);
          est.per_rep[r] = dx * dx + dy * dy;
        }
        const MeanSe ms = mean_and_se(est.per_rep);
        est.mean = ms.mean;
        est.std_error = ms.se;
        break;
      }
      case MetricKind::kSgm: {
        est.per_rep.resize(xs.size());
        for (std::size_t r = 0; r < xs.size(); ++r)
          est.per_rep[r] = empirical_duality_gap(pop, xs[r], ys[r], opts.solver);
        const MeanSe ms = mean_and_se(est.per_rep);
        est.mean = ms.mean;
        est.std_error = ms.se;
        break;
      }
      case MetricKind::kWgm: {
        // The expectation sits inside the max/min. All families here are
        // affine in x (resp. y) around the coupling, so the replication
        // average of Phi(x_r, .) is Phi(mean x_r, .) up to y-independent
        // terms and the maximizer is the population best response at the
        // mean solution; the value is then averaged exactly.
        Vector x_mean = Vector::Zero(problem->dim_x());
        Vector y_mean = Vector::Zero(problem->dim_y());
        for (std::size_t r = 0; r < xs.size(); ++r) {
          x_mean += xs[r];
          y_mean += ys[r];
        }
        x_mean /= static_cast<double>(xs.size());
        y_mean /= static_cast<double>(ys.size());
        const BestResponse up =
            best_response(pop, x_mean, Side::kMaximizeY, opts.solver);
        const BestResponse low =
            best_response(pop, y_mean, Side::kMinimizeX, opts.solver);
        std::vector<double> conditional(xs.size());
        for (std::size_t r = 0; r < xs.size(); ++r)
          conditional[r] =
              pop.value(xs[r], up.point) - pop.value(low.point, ys[r]);
        const MeanSe ms = mean_and_se(conditional);
        est.mean = ms.mean;
        est.std_error = ms.se;  // conditional on the fitted maximizers
        break;
      }
    }
    out.push_back(std::move(est));
  }
  return out;
}

GeneralizationEstimate estimate_generalization(const ProblemPtr& problem, int n,
                                               int replications, MetricKind metric,
                                               const EstimateOptions& opts) {
  return estimate_metrics(problem, n, replications, {metric}, opts).front();
}

double theoretical_bound(BoundKind kind, const ProblemConstants& c,
                         const Regularizer& reg, int n) {
  require(n >= 1, "theoretical_bound: n must be >= 1");
  const double dn = static_cast<double>(n);
  const double two_sqrt2 = 2.0 * std::sqrt(2.0);

  auto require_finite = [](double v, const char* what) {
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string("theoretical_bound: ") + what +
                                  " is not finite (missing assumption)");
  };
  auto require_positive = [](double v, const char* what) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("theoretical_bound: ") + what +
                                  " must be positive (missing assumption)");
  };

  switch (kind) {
    case BoundKind::kScscWgm: {
      require_positive(c.mu_x, "mu_x");
      require_positive(c.mu_y, "mu_y");
      require_finite(c.lip_x_weak, "lip_x_weak");
      require_finite(c.lip_y_weak, "lip_y_weak");
      return two_sqrt2 / dn *
             (c.lip_x_weak * c.lip_x_weak / c.mu_x +
              c.lip_y_weak * c.lip_y_weak / c.mu_y);
    }
    case BoundKind::kScscSgm: {
      require_positive(c.mu_x, "mu_x");
      require_positive(c.mu_y, "mu_y");
      require_finite(c.lip_x_strong, "lip_x_strong");
      require_finite(c.lip_y_strong, "lip_y_strong");
      require_finite(c.grad_lip_xy, "grad_lip_xy");
      const double factor =
          std::sqrt(c.grad_lip_xy * c.grad_lip_xy / (c.mu_x * c.mu_y) + 1.0);
      return two_sqrt2 / dn * factor *
             (c.lip_x_strong * c.lip_x_strong / c.mu_x +
              c.lip_y_strong * c.lip_y_strong / c.mu_y);
    }
    case BoundKind::kUnboundedD2: {
      require_finite(c.grad_second_moment_opt, "grad second moment C");
      const double kappa = c.condition_number();
      const double mu = std::min(c.mu_x, c.mu_y);
      return c.grad_second_moment_opt * kappa * kappa / (dn * mu * mu);
    }
    case BoundKind::kUnboundedSgm: {
      require_finite(c.grad_second_moment_opt, "grad second moment C");
      const double kappa = c.condition_number();
      const double mu = std::min(c.mu_x, c.mu_y);
      return c.grad_second_moment_opt * kappa * kappa * kappa * kappa / (dn * mu);
    }
    case BoundKind::kRegularizedWgm: {
      const double mx = c.mu_x + reg.nu_x();
      const double my = c.mu_y + reg.nu_y();
      require_positive(mx, "mu_x + nu_x");
      require_positive(my, "mu_y + nu_y");
      require_finite(c.lip_x_weak, "lip_x_weak");
      require_finite(c.lip_y_weak, "lip_y_weak");
      return 2.0 * c.lip_x_weak * c.lip_x_weak / (dn * mx) +
             2.0 * c.lip_y_weak * c.lip_y_weak / (dn * my) + 2.0 * reg.bound_r();
    }
    case BoundKind::kDiameterWgm: {
      // regularized WGM bound at the diameter-balanced coefficients, folded
      // into closed form: 2 l D / sqrt(n) per block plus 2R with
      // R = (l_x D_x + l_y D_y)/(2 sqrt(n)).
      require_finite(c.diam_x, "diam_x");
      require_finite(c.diam_y, "diam_y");
      require_finite(c.lip_x_weak, "lip_x_weak");
      require_finite(c.lip_y_weak, "lip_y_weak");
      return 3.0 * (c.lip_x_weak * c.diam_x + c.lip_y_weak * c.diam_y) /
             std::sqrt(dn);
    }
    case BoundKind::kStabilityRhs:
    case BoundKind::kStabilityRhsRegularized: {
      const bool reg_kind = kind == BoundKind::kStabilityRhsRegularized;
      const double mx = c.mu_x + (reg_kind ? reg.nu_x() : 0.0);
      const double my = c.mu_y + (reg_kind ? reg.nu_y() : 0.0);
      require_positive(mx, "mu_x (+ nu_x)");
      require_positive(my, "mu_y (+ nu_y)");
      require_finite(c.lip_x_strong, "lip_x_strong");
      require_finite(c.lip_y_strong, "lip_y_strong");
      const double sx = 2.0 * c.lip_x_strong;
      const double sy = 2.0 * c.lip_y_strong;
      return std::sqrt(sx * sx / mx + sy * sy / my) / dn;
    }
  }
  throw std::invalid_argument("theoretical_bound: unknown kind");
}

}  // namespace esp
