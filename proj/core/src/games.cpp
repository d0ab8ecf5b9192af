// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/games.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "espkit/parallel.hpp"

namespace esp {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

GameInstance make_game_instance(Matrix true_payoff, double noise_scale) {
  GameInstance game;
  game.problem = make_bilinear_game(true_payoff, noise_scale);
  game.true_payoff = std::move(true_payoff);
  game.noise_scale = noise_scale;
  return game;
}

GameInstance make_random_game_instance(int n1, int n2, double noise_scale,
                                       std::uint64_t seed) {
  require(n1 >= 2 && n2 >= 2, "make_random_game_instance: needs N1, N2 >= 2");
  Rng rng(seed);
  Matrix mean = Matrix::NullaryExpr(n1, n2, [&](Eigen::Index, Eigen::Index) {
    return rng.uniform(-0.9, 0.9);
  });
  return make_game_instance(std::move(mean), noise_scale);
}

namespace {

Regularizer game_entropy_regularizer(int n1, int n2, int n) {
  require(n >= 1, "game regularizer: n must be >= 1");
  const double log_n1 = std::log(static_cast<double>(n1));
  const double log_n2 = std::log(static_cast<double>(n2));
  require(log_n1 > 0.0 && log_n2 > 0.0,
          "game regularizer: N = 1 makes the log divisor vanish");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double nu_x = 1.0 / std::sqrt(n * log_n1);
  const double nu_y = 1.0 / std::sqrt(n * log_n2);
  const double bound_r = (std::sqrt(log_n1) + std::sqrt(log_n2)) / sqrt_n;
  return Regularizer::entropy_entropy(nu_x, nu_y, bound_r);
}

}  // namespace

EmpiricalObjective build_game_objective(const ProblemPtr& game_problem,
                                   SampleSet samples) {
  require(game_problem != nullptr, "build_game_objective: null problem");
  require(game_problem->family() == "game", "build_game_objective: game family only");
  require(samples.n() >= 1, "build_game_objective: empty sample set");
  Regularizer reg = game_entropy_regularizer(game_problem->dim_x(),
                                             game_problem->dim_y(), samples.n());
  return EmpiricalObjective(game_problem, std::move(samples), std::move(reg));
}

RegularizerRule game_entropy_rule() {
  return [](const StochasticSaddleProblem& problem, int n) {
    require(problem.family() == "game", "game_entropy_rule: game family only");
    return game_entropy_regularizer(problem.dim_x(), problem.dim_y(), n);
  };
}

NashCertificate epsilon_nash_gap(const Matrix& true_payoff, const Vector& x_bar,
                                 const Vector& y_bar) {
  require(x_bar.size() == true_payoff.rows() && y_bar.size() == true_payoff.cols(),
          "epsilon_nash_gap: strategy dimensions do not match the payoff");
  NashCertificate cert;
  const double value = x_bar.dot(true_payoff * y_bar);
  cert.player2_gain = (true_payoff.transpose() * x_bar).maxCoeff() - value;
  cert.player1_gain = value - (true_payoff * y_bar).minCoeff();
  cert.epsilon = std::max(cert.player1_gain, cert.player2_gain);
  return cert;
}

double game_epsilon_bound(int n1, int n2, int n) {
  require(n1 >= 2 && n2 >= 2 && n >= 1, "game_epsilon_bound: bad arguments");
  return 16.0 * std::sqrt(std::log(static_cast<double>(n1) * n2) / n);
}

RateSweep run_game_experiment(const GameInstance& game,
                              const GameExperimentSpec& spec) {
  require(!spec.n_grid.empty(), "run_game_experiment: empty n grid");
  require(spec.replications >= 2, "run_game_experiment: needs >= 2 replications");
  for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
    require(spec.n_grid[i] > spec.n_grid[i - 1],
            "run_game_experiment: n grid must be strictly increasing");

  RateSweep sweep;
  sweep.problem_tag = "game";
  sweep.replications = spec.replications;
  sweep.master_seed = spec.master_seed;

  for (const int n : spec.n_grid) {
    std::vector<double> epsilons(static_cast<std::size_t>(spec.replications));
    parallel_for(
        static_cast<std::size_t>(spec.replications), spec.threads,
        [&](std::size_t r) {
          const std::uint64_t seed =
              Rng::stream(spec.master_seed, static_cast<std::uint64_t>(n),
                          static_cast<std::uint64_t>(r))();
          SampleSet samples = game.problem->draw_samples(seed, n);
          const EmpiricalObjective objective =
              build_game_objective(game.problem, std::move(samples));
          const SaddleSolution sol = solve_mirror_prox(objective, spec.solver);
          if (!sol.converged) {
            std::ostringstream msg;
            msg << "run_game_experiment: replication " << r << " at n=" << n
                << " did not converge (gap " << sol.certified_gap << ")";
            throw std::runtime_error(msg.str());
          }
          epsilons[r] =
              epsilon_nash_gap(game.true_payoff, sol.x_hat, sol.y_hat).epsilon;
        });

    RateRow row;
    row.n = n;
    row.metric = "eps_nash";
    double mean = 0.0;
    for (double v : epsilons) mean += v;
    mean /= spec.replications;
    double ss = 0.0;
    for (double v : epsilons) ss += (v - mean) * (v - mean);
    row.mean = mean;
    row.std_error = std::sqrt(ss / (spec.replications - 1.0)) /
                    std::sqrt(static_cast<double>(spec.replications));
    row.bound = game_epsilon_bound(game.n1(), game.n2(), n);
    row.replications = spec.replications;
    row.seed = Rng::stream(spec.master_seed, static_cast<std::uint64_t>(n))();
    sweep.rows.push_back(std::move(row));
  }
  return sweep;
}

SampleSet read_payoff_csv(const std::string& csv_text, int n1, int n2) {
  require(n1 >= 2 && n2 >= 2, "read_payoff_csv: needs N1, N2 >= 2");
  SampleSet out;
  std::istringstream in(csv_text);
  std::string line;
  Matrix current = Matrix::Zero(n1, n2);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n1, n2);
  int filled = 0;
  int line_no = 0;

  auto flush_play = [&](bool required) {
    if (filled == 0) return;
    if (filled != n1 * n2 || required) {
      if (filled != n1 * n2) {
        std::ostringstream msg;
        msg << "read_payoff_csv: play ending before line " << line_no
            << " covers " << filled << " of " << n1 * n2 << " cells";
        throw std::invalid_argument(msg.str());
      }
    }
    out.data.push_back(GameDatum{current});
    current.setZero();
    seen.setZero();
    filled = 0;
  };

  while (std::getline(in, line)) {
    ++line_no;
    // trim
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
      flush_play(true);
      continue;
    }
    const auto end = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(begin, end - begin + 1);
    if (body.empty() || body[0] == '#') continue;
    if (body == "i,j,payoff") continue;  // optional header

    std::istringstream row(body);
    int i = -1, j = -1;
    double payoff = 0.0;
    char comma1 = 0, comma2 = 0;
    row >> i >> comma1 >> j >> comma2 >> payoff;
    if (row.fail() || comma1 != ',' || comma2 != ',') {
      std::ostringstream msg;
      msg << "read_payoff_csv: line " << line_no << ": expected 'i,j,payoff'";
      throw std::invalid_argument(msg.str());
    }
    require(i >= 0 && i < n1 && j >= 0 && j < n2,
            "read_payoff_csv: index out of range at line " +
                std::to_string(line_no));
    require(std::abs(payoff) <= 1.0,
            "read_payoff_csv: |payoff| > 1 at line " + std::to_string(line_no));
    if (seen(i, j)) {
      std::ostringstream msg;
      msg << "read_payoff_csv: duplicate cell (" << i << ", " << j
          << ") at line " << line_no;
      throw std::invalid_argument(msg.str());
    }
    seen(i, j) = 1;
    current(i, j) = payoff;
    if (++filled == n1 * n2) flush_play(false);
  }
  flush_play(true);
  require(!out.data.empty(), "read_payoff_csv: no complete plays found");
  return out;
}

}  // namespace esp
