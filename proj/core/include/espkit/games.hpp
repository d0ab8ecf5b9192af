// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_GAMES_HPP
#define ESPKIT_GAMES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "espkit/problems.hpp"
#include "espkit/rates.hpp"
#include "espkit/solver.hpp"

namespace esp {

/// A stochastic matrix game: the true mean payoff (known to the generator,
/// hidden from the estimator) plus the sampling problem built on it.
struct GameInstance {
  Matrix true_payoff;
  double noise_scale = 0.0;
  ProblemPtr problem;

  int n1() const { return static_cast<int>(true_payoff.rows()); }
  int n2() const { return static_cast<int>(true_payoff.cols()); }
};

GameInstance make_game_instance(Matrix true_payoff, double noise_scale);
GameInstance make_random_game_instance(int n1, int n2, double noise_scale,
                                       std::uint64_t seed);

/// Entropy-regularized empirical game
///   sum_i x_i log x_i / sqrt(n log N1) + x' (mean A) y
///     - sum_j y_j log y_j / sqrt(n log N2)
/// with R = (sqrt(log N1) + sqrt(log N2)) / sqrt(n).
EmpiricalObjective build_game_objective(const ProblemPtr& game_problem,
                                   SampleSet samples);

/// How much either player can gain against the true payoff by deviating
/// unilaterally; epsilon = 0 exactly at a Nash equilibrium.
struct NashCertificate {
  double player1_gain = 0.0;  // xbar'A ybar - min_x x'A ybar
  double player2_gain = 0.0;  // max_y xbar'A y - xbar'A ybar
  double epsilon = 0.0;
};

/// Both maxima computed exactly by vertex enumeration (linear objectives
/// over simplices).
NashCertificate epsilon_nash_gap(const Matrix& true_payoff, const Vector& x_bar,
                                 const Vector& y_bar);

/// 16 sqrt(log(N1 N2) / n), the closed-form epsilon envelope.
double game_epsilon_bound(int n1, int n2, int n);

struct GameExperimentSpec {
  std::vector<int> n_grid;
  int replications = 100;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  int threads = 0;
};

/// Per (n, replication): draw n payoff samples, solve the regularized
/// empirical game, certify against the true payoff. Rows carry the
/// epsilon envelope in the bound column.
RateSweep run_game_experiment(const GameInstance& game,
                              const GameExperimentSpec& spec);

/// Aggregates logged `i,j,payoff` triplets (0-based indices, one play per
/// line, plays separated by `play` lines or grouped by full coverage) into
/// per-play payoff matrices. Format: CSV rows "i,j,payoff"; a blank line or
/// EOF closes a play; every play must cover each (i, j) exactly once.
SampleSet read_payoff_csv(const std::string& csv_text, int n1, int n2);

/// The build_game_objective regularizer as a rule usable by sweep harnesses.
RegularizerRule game_entropy_rule();

}  // namespace esp

#endif  // ESPKIT_GAMES_HPP
