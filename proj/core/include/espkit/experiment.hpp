// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_EXPERIMENT_HPP
#define ESPKIT_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace esp {

inline constexpr const char* kVersion = "0.1.0";

/// Flat plain-text experiment configuration (`key = value` lines, `#`
/// comments). Every known key is emitted by to_text(), so a config
/// round-trips losslessly; unknown keys are rejected with their line number.
struct ExperimentConfig {
  // what to run
  std::string kind = "rate-sweep";  // rate-sweep | stability | mdp | game | solve

  // problem instance
  std::string problem = "quadratic";  // quadratic | game | mdp
  std::uint64_t problem_seed = 1;
  // quadratic family
  int dim_x = 3;
  int dim_y = 3;
  double mu_x = 1.0;
  double mu_y = 1.0;
  double noise_scale = 0.5;
  double box_radius_x = 0.0;
  double box_radius_y = 0.0;
  // game family
  std::string payoff = "random";  // random | matching-pennies | zero
  int payoff_rows = 10;
  int payoff_cols = 10;
  double payoff_noise = 0.5;
  // mdp family
  int num_states = 5;
  int num_actions = 2;
  double min_transition_prob = 0.05;
  double reward_noise = 0.0;

  // experiment plan
  std::vector<int> n_grid = {16, 32, 64, 128, 256};
  int replications = 100;
  std::uint64_t master_seed = 0;
  std::string metric = "wgm";        // wgm | sgm | d2 (rate-sweep)
  std::string regularizer = "none";  // none | diameter | family
  std::string bound = "none";  // none|scsc-wgm|scsc-sgm|unbounded-d2|
                               //   unbounded-sgm|regularized-wgm|diameter-wgm
  int trials = 200;            // stability
  int loo_n = 50;              // stability
  std::string stability_suite = "scsc";  // scsc | regularized
  int solve_n = 1;             // solve

  // solver
  int max_iter = 200000;
  double gap_tol = 0.0;  // 0 = auto (1e-8 relative rule)
  int threads = 0;       // 0 = machine parallelism

  std::string to_text() const;
};

struct ConfigError : std::runtime_error {
  ConfigError(int line_number, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line_number) + ": " +
                           message),
        line(line_number) {}
  int line;
};

ExperimentConfig parse_config(const std::string& text);

struct RunOptions {
  std::string out_dir = ".";
  std::optional<int> threads;                 // overrides config
  std::optional<std::uint64_t> seed_override;  // overrides config
};

/// Runs the configured experiment and writes `results.csv`, `fits.csv` and
/// `manifest.json` into out_dir. The manifest is written even on failure.
/// Returns 0 when the run finished and every asserted invariant passed,
/// 1 otherwise.
int run_config(const ExperimentConfig& config, const RunOptions& options);

}  // namespace esp

#endif  // ESPKIT_EXPERIMENT_HPP
