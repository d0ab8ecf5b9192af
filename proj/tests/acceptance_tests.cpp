// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0
//
// Acceptance suite: every release-gating property in one binary, one
// pass/fail line per criterion. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "espkit/experiment.hpp"
#include "espkit/games.hpp"
#include "espkit/mdp.hpp"
#include "espkit/metrics.hpp"
#include "espkit/parallel.hpp"
#include "espkit/rates.hpp"
#include "espkit/solver.hpp"
#include "espkit/stability.hpp"

using namespace esp;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& label) {
    if (!condition) {
      passed = false;
      detail << " FAILED[" << label << "]";
    }
  }
};

int g_failures = 0;

void criterion(int id, const std::string& title,
               const std::function<void(Outcome&)>& body) {
  Outcome outcome;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(outcome);
  } catch (const std::exception& e) {
    outcome.passed = false;
    outcome.detail << " exception: " << e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!outcome.passed) ++g_failures;
  std::printf("[%s] criterion %2d: %s (%.1fs)%s\n",
              outcome.passed ? "PASS" : "FAIL", id, title.c_str(), seconds,
              outcome.detail.str().c_str());
  std::fflush(stdout);
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ProblemPtr bounded_quadratic() {
  Rng rng(2026);
  return make_quadratic_scsc(
      random_quadratic_spec(3, 3, 1.0, 1.25, 0.5, 3.0, 3.0, rng));
}

ProblemPtr unbounded_quadratic() {
  Rng rng(2027);
  return make_quadratic_scsc(
      random_quadratic_spec(3, 2, 1.0, 1.25, 0.5, 0.0, 0.0, rng));
}

GameInstance default_game() { return make_random_game_instance(10, 10, 0.5, 2028); }

std::vector<int> geometric_grid(int lo, int hi) {
  std::vector<int> grid;
  for (int n = lo; n <= hi; n *= 2) grid.push_back(n);
  return grid;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

int main() {
  const int threads = 0;  // machine parallelism

  criterion(1, "solver correctness on deterministic matching pennies", [](Outcome& o) {
    Matrix pennies(2, 2);
    pennies << 1, -1, -1, 1;
    const ProblemPtr game = make_bilinear_game(pennies, 0.0);
    const EmpiricalObjective obj(game, game->draw_samples(1, 1),
                                 Regularizer::none());
    SolverConfig cfg;
    cfg.gap_tol = 1e-6;
    cfg.max_iter = 5000;
    const auto t0 = std::chrono::steady_clock::now();
    const SaddleSolution sol = solve_mirror_prox(obj, cfg);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    o.expect(sol.converged && sol.certified_gap <= 1e-6, "gap<=1e-6");
    o.expect(sol.iterations <= 5000, "within 5000 iterations");
    o.expect((sol.x_hat - vec2(0.5, 0.5)).norm() <= 1e-3 &&
                 (sol.y_hat - vec2(0.5, 0.5)).norm() <= 1e-3,
             "within 1e-3 of uniform");
    o.expect(seconds < 1.0, "runtime < 1s");
    o.detail << " gap=" << sol.certified_gap << " iters=" << sol.iterations;
  });

  criterion(2, "mirror-prox matches the closed-form oracle on 50 instances",
            [](Outcome& o) {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      Rng rng(3000 + k);
      const ProblemPtr p = make_quadratic_scsc(
          random_quadratic_spec(3, 2, 1.0, 1.2, 0.6, 0.0, 0.0, rng));
      const EmpiricalObjective obj(p, p->draw_samples(4000 + k, 6),
                                   Regularizer::none());
      const SaddleSolution exact = solve_quadratic_closed_form(obj);
      SolverConfig cfg;
      cfg.gap_tol = 1e-13;
      const SaddleSolution iterative = solve_mirror_prox(obj, cfg);
      const double dist = std::sqrt((iterative.x_hat - exact.x_hat).squaredNorm() +
                                    (iterative.y_hat - exact.y_hat).squaredNorm());
      worst = std::max(worst, dist);
    }
    o.expect(worst <= 1e-6, "L2 agreement within 1e-6");
    o.detail << " worst=" << worst;
  });

  criterion(3, "analytic gradients match central differences", [](Outcome& o) {
    const MdpInstance mdp_instance = make_random_ergodic_mdp(5, 2, 0.1, 2029);
    const MdpConstants constants = estimate_mixing_constants(mdp_instance, 32, 1);
    const std::vector<ProblemPtr> problems = {
        bounded_quadratic(), default_game().problem,
        make_mdp_saddle_problem(mdp_instance, constants)};
    const double h = 1e-5;
    double worst = 0.0;
    for (const ProblemPtr& p : problems) {
      Rng rng(97);
      for (int point = 0; point < 50; ++point) {
        const SampleDatum datum = p->sample(rng);
        const Vector x = sample_point(p->set_x(), rng);
        const Vector y = sample_point(p->set_y(), rng);
        const Vector gx = p->sample_grad_x(datum, x, y);
        const Vector gy = p->sample_grad_y(datum, x, y);
        for (int i = 0; i < p->dim_x(); ++i) {
          Vector hi = x, lo = x;
          hi[i] += h;
          lo[i] -= h;
          const double fd =
              (p->sample_value(datum, hi, y) - p->sample_value(datum, lo, y)) /
              (2.0 * h);
          worst = std::max(worst,
                           std::abs(fd - gx[i]) / (1.0 + std::abs(gx[i])));
        }
        for (int j = 0; j < p->dim_y(); ++j) {
          Vector hi = y, lo = y;
          hi[j] += h;
          lo[j] -= h;
          const double fd =
              (p->sample_value(datum, x, hi) - p->sample_value(datum, x, lo)) /
              (2.0 * h);
          worst = std::max(worst,
                           std::abs(fd - gy[j]) / (1.0 + std::abs(gy[j])));
        }
      }
    }
    o.expect(worst <= 1e-6, "relative error <= 1e-6");
    o.detail << " worst=" << worst;
  });

  criterion(4, "leave-one-out stability: zero violations in 200+200 trials",
            [&](Outcome& o) {
    SolverConfig cfg;
    cfg.gap_tol = 1e-9;
    const double slack = 10.0 * cfg.gap_tol;

    const ProblemPtr quad = bounded_quadratic();
    int violations_1 = 0, invalid_1 = 0;
    std::vector<StabilityTrial> trials_1(200);
    parallel_for(200, threads, [&](std::size_t t) {
      trials_1[t] = run_loo_trial(quad, 50, Regularizer::none(),
                                  static_cast<int>(t) % 50, 5000 + t, cfg);
    });
    for (const auto& trial : trials_1) {
      if (!trial.valid) ++invalid_1;
      else if (!trial.passes(slack)) ++violations_1;
    }
    o.expect(violations_1 == 0 && invalid_1 == 0, "unregularized suite");

    const ProblemPtr game = make_random_bilinear_game(5, 5, 0.5, 2030);
    const Regularizer reg = diameter_regularizer(game->constants_l2(), 50);
    int violations_3 = 0, invalid_3 = 0;
    std::vector<StabilityTrial> trials_3(200);
    parallel_for(200, threads, [&](std::size_t t) {
      trials_3[t] = run_loo_trial(game, 50, reg, static_cast<int>(t) % 50,
                                  6000 + t, cfg, StabilityGeometry::kEuclidean);
    });
    for (const auto& trial : trials_3) {
      if (!trial.valid) ++invalid_3;
      else if (!trial.passes(slack)) ++violations_3;
    }
    o.expect(violations_3 == 0 && invalid_3 == 0, "regularized suite");
    o.detail << " violations=" << violations_1 << "+" << violations_3;
  });

  // Criteria 5-7 share one multi-metric sweep.
  const ProblemPtr sweep_problem = bounded_quadratic();
  SweepSpec sc_spec;
  sc_spec.n_grid = geometric_grid(16, 4096);
  sc_spec.replications = 200;
  sc_spec.master_seed = 777;
  sc_spec.threads = threads;
  sc_spec.problem_tag = "quadratic";
  const auto sweep_t0 = std::chrono::steady_clock::now();
  const std::vector<RateSweep> sc_sweeps = run_rate_sweep_multi(
      sweep_problem, sc_spec, {MetricKind::kWgm, MetricKind::kSgm, MetricKind::kD2},
      {bound_rule(BoundKind::kScscWgm), bound_rule(BoundKind::kScscSgm),
       BoundRule{}});
  std::printf("       shared SC-SC sweep for criteria 5-7: %.1fs\n",
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            sweep_t0)
                  .count());

  criterion(5, "WGM decays like 1/n under its SC-SC bound", [&](Outcome& o) {
    const RateSweep& sweep = sc_sweeps[0];
    const RateFit fit = fit_sweep(sweep, 0.0);
    o.expect(fit.slope >= -1.3 && fit.slope <= -0.75, "slope in [-1.3,-0.75]");
    for (const RateRow& row : sweep.rows)
      o.expect(row.mean <= row.bound + 3.0 * row.std_error,
               "bound dominance at n=" + std::to_string(row.n));
    o.detail << " slope=" << fit.slope << " r2=" << fit.r_squared;
  });

  criterion(6, "SGM decays like 1/n under its SC-SC bound", [&](Outcome& o) {
    const RateSweep& sweep = sc_sweeps[1];
    const RateFit fit = fit_sweep(sweep, 0.0);
    o.expect(fit.slope >= -1.3 && fit.slope <= -0.75, "slope in [-1.3,-0.75]");
    for (const RateRow& row : sweep.rows)
      o.expect(row.mean <= row.bound + 3.0 * row.std_error,
               "bound dominance at n=" + std::to_string(row.n));
    o.detail << " slope=" << fit.slope;
  });

  criterion(7, "metric ordering d2 <= WGM <= SGM on every sweep row",
            [&](Outcome& o) {
    const double mu_min = std::min(sweep_problem->constants().mu_x,
                                   sweep_problem->constants().mu_y);
    for (std::size_t i = 0; i < sc_sweeps[0].rows.size(); ++i) {
      const RateRow& wgm = sc_sweeps[0].rows[i];
      const RateRow& sgm = sc_sweeps[1].rows[i];
      const RateRow& d2 = sc_sweeps[2].rows[i];
      o.expect(mu_min * d2.mean / 2.0 <= wgm.mean + 4.0 * wgm.std_error,
               "lower ordering at n=" + std::to_string(wgm.n));
      o.expect(wgm.mean <= sgm.mean + 8.0 * sgm.std_error,
               "upper ordering at n=" + std::to_string(wgm.n));
    }
  });

  criterion(8, "diameter-regularized game: WGM decays like 1/sqrt(n)",
            [&](Outcome& o) {
    const GameInstance game = default_game();
    SweepSpec spec;
    spec.n_grid = geometric_grid(16, 4096);
    spec.replications = 100;
    spec.metric = MetricKind::kWgm;
    spec.regularizer = diameter_regularizer_rule();
    spec.bound = bound_rule_l2(BoundKind::kDiameterWgm);
    spec.master_seed = 778;
    spec.threads = threads;
    spec.problem_tag = "game";
    const RateSweep sweep = run_rate_sweep(game.problem, spec);
    const RateFit fit = fit_sweep(sweep, 0.0);
    o.expect(fit.slope >= -0.65 && fit.slope <= -0.35, "slope in [-0.65,-0.35]");
    for (const RateRow& row : sweep.rows)
      o.expect(row.mean <= row.bound + 3.0 * row.std_error,
               "bound dominance at n=" + std::to_string(row.n));
    o.detail << " slope=" << fit.slope;
  });

  criterion(9, "unbounded quadratics: d2 rate, distance bounds, variance law",
            [&](Outcome& o) {
    const ProblemPtr p = unbounded_quadratic();
    SweepSpec spec;
    spec.n_grid = geometric_grid(16, 4096);
    spec.replications = 200;
    spec.metric = MetricKind::kD2;
    spec.bound = bound_rule(BoundKind::kUnboundedD2);
    spec.master_seed = 779;
    spec.threads = threads;
    spec.problem_tag = "quadratic-unbounded";
    const RateSweep sweep = run_rate_sweep(p, spec);
    const RateFit fit = fit_sweep(sweep, 0.0);
    o.expect(fit.slope >= -1.3 && fit.slope <= -0.75,
             "d2 slope in [-1.3,-0.75]");

    const DistanceBoundReport fixed_n = check_distance_bounds(p, 64, 200, 781, threads);
    o.expect(fixed_n.violations_x == 0 && fixed_n.violations_y == 0,
             "distance inequalities on all 200 replications");

    std::vector<std::pair<double, double>> variance_points;
    for (const int n : spec.n_grid) {
      const DistanceBoundReport rep = check_distance_bounds(p, n, 200, 780, threads);
      variance_points.emplace_back(n, rep.mean_grad_x_at_saddle_sq);
    }
    const RateFit variance_fit = fit_loglog_slope(variance_points);
    o.expect(std::abs(variance_fit.slope + 1.0) <= 0.15,
             "gradient second moment slope -1 +/- 0.15");
    o.detail << " d2_slope=" << fit.slope
             << " var_slope=" << variance_fit.slope;
  });

  criterion(10, "argmin-map Lipschitz and primal/dual smoothness envelopes",
            [](Outcome& o) {
    const ProblemPtr p = unbounded_quadratic();
    const ArgmapLipschitzReport argmap =
        check_argmap_lipschitz(p, 1000, 881, SolverConfig{});
    o.expect(argmap.violations == 0, "argmap violations");
    const SmoothnessReport smooth =
        check_primal_smoothness(p, 1000, 882, SolverConfig{});
    o.expect(smooth.violations == 0, "smoothness violations");
    o.detail << " argmap_max=" << argmap.max_ratio_x << "/" << argmap.bound_x
             << " Lf_max=" << smooth.max_ratio_primal << "/"
             << smooth.bound_primal;
  });

  criterion(11, "MDP policy learning experiment", [&](Outcome& o) {
    const MdpInstance mdp = make_random_ergodic_mdp(5, 2, 0.1, 2031);
    MdpExperimentSpec spec;
    spec.n_grid = geometric_grid(64, 4096);
    spec.replications = 50;
    spec.master_seed = 883;
    spec.threads = threads;
    const MdpExperimentResult result = run_mdp_experiment(mdp, spec);

    const RateFit fit = fit_sweep(result.sweep, 0.0);
    o.expect(fit.slope <= -0.3, "regret slope <= -0.3");
    const RateRow& first = result.sweep.rows.front();
    const RateRow& last = result.sweep.rows.back();
    const double joint_se = std::sqrt(first.std_error * first.std_error +
                                      last.std_error * last.std_error);
    o.expect(last.mean < first.mean - 3.0 * joint_se,
             "largest-n regret below smallest-n by 3 joint SE");
    o.expect(result.max_eq18_residual <= 1e-8,
             "stationarity identity residual <= 1e-8");
    o.expect(result.min_regret >= -1e-8, "regret nonneg");

    const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, result.constants);
    const MomentEnvelopeReport envelopes =
        check_mdp_moment_envelopes(problem, 20, 2000, 884);
    o.expect(envelopes.ratio_x() <= 10.0, "grad-x moment envelope");
    o.expect(envelopes.grad_y_moment <= envelopes.grad_y_envelope,
             "grad-y moment envelope");
    o.detail << " slope=" << fit.slope
             << " eq18=" << result.max_eq18_residual
             << " tmix=" << result.constants.t_mix
             << " tau=" << result.constants.tau;
  });

  criterion(12, "stochastic game experiment under the epsilon envelope",
            [&](Outcome& o) {
    const GameInstance game = default_game();
    GameExperimentSpec spec;
    spec.n_grid = geometric_grid(16, 4096);
    spec.replications = 100;
    spec.master_seed = 885;
    spec.threads = threads;
    const RateSweep sweep = run_game_experiment(game, spec);
    for (const RateRow& row : sweep.rows)
      o.expect(row.mean <= row.bound + 3.0 * row.std_error,
               "envelope at n=" + std::to_string(row.n));
    const RateFit fit = fit_sweep(sweep, 0.0);
    o.expect(fit.slope >= -0.65 && fit.slope <= -0.35, "slope in [-0.65,-0.35]");
    o.detail << " slope=" << fit.slope;
  });

  criterion(13, "byte-identical reruns across thread counts", [](Outcome& o) {
    ExperimentConfig config;
    config.kind = "rate-sweep";
    config.problem = "quadratic";
    config.noise_scale = 0.5;
    config.n_grid = {8, 16, 32};
    config.replications = 8;
    config.master_seed = 424242;
    config.metric = "d2";
    config.bound = "unbounded-d2";

    const auto base =
        std::filesystem::temp_directory_path() / "espkit_acceptance";
    std::filesystem::remove_all(base);
    RunOptions o1;
    o1.out_dir = (base / "t1").string();
    o1.threads = 1;
    RunOptions o2;
    o2.out_dir = (base / "t3").string();
    o2.threads = 3;
    o.expect(run_config(config, o1) == 0, "run with 1 thread");
    o.expect(run_config(config, o2) == 0, "run with 3 threads");
    o.expect(slurp(base / "t1" / "results.csv") ==
                 slurp(base / "t3" / "results.csv"),
             "results.csv byte-identical");

    // the same invariance holds for the game experiment rows
    const GameInstance game = make_random_game_instance(4, 4, 0.4, 11);
    GameExperimentSpec gspec;
    gspec.n_grid = {8, 32};
    gspec.replications = 6;
    gspec.master_seed = 53;
    gspec.threads = 1;
    const RateSweep g1 = run_game_experiment(game, gspec);
    gspec.threads = 3;
    const RateSweep g3 = run_game_experiment(game, gspec);
    for (std::size_t i = 0; i < g1.rows.size(); ++i)
      o.expect(g1.rows[i].mean == g3.rows[i].mean &&
                   g1.rows[i].std_error == g3.rows[i].std_error,
               "game rows bitwise equal");
  });

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
