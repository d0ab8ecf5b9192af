// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_MDP_HPP
#define ESPKIT_MDP_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "espkit/problems.hpp"
#include "espkit/rates.hpp"
#include "espkit/solver.hpp"

namespace esp {

/// Finite average-reward MDP. transitions[a] is row-stochastic (rows sum to
/// 1 within 1e-12); rewards lie in [0, 1]. reward_noise adds bounded uniform
/// noise to sampled rewards (amplitude clipped per entry so samples stay in
/// [0, 1] with exact mean); 0 keeps sampled rewards deterministic.
struct MdpInstance {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Matrix> transitions;
  Matrix rewards;
  double reward_noise = 0.0;

  void validate() const;  // throws std::invalid_argument on violations
};

/// Every transition probability is at least min_transition_prob, which makes
/// the chain ergodic under every stationary policy. Rewards uniform on [0,1].
MdpInstance make_random_ergodic_mdp(int num_states, int num_actions,
                                    double min_transition_prob,
                                    std::uint64_t seed);

/// Plain-text fixture format: header, then rewards and per-action transition
/// blocks, row-major, 17 significant digits.
std::string mdp_to_text(const MdpInstance& mdp);
MdpInstance mdp_from_text(const std::string& text);

/// Ergodicity constant tau and mixing time t_mix, estimated by scanning
/// policies. Lower bounds of the true suprema: all deterministic policies
/// are scanned when |A|^|S| <= 4096, plus random stochastic policies.
struct MdpConstants {
  int t_mix = 1;
  double tau = 1.0;
  int policy_set_size = 0;
};

MdpConstants estimate_mixing_constants(const MdpInstance& mdp,
                                       int extra_random_policies,
                                       std::uint64_t seed);

struct PolicyMatrix {
  Matrix prob;  // numStates x numActions, rows on the simplex
};

/// Exact reference solution: optimal gain v*, centered bias vector x*, and
/// the stationary state-action occupancy y* of the greedy optimal policy
/// (action-major layout). Satisfies primal feasibility
/// v* 1 + (I - P_a) x* - r_a >= -10 tol and complementarity <y*, r> = v*.
struct ExactMdpSolution {
  double v_star = 0.0;
  Vector x_star;
  Vector y_star;
  PolicyMatrix policy;
};

/// Relative value iteration to span tolerance plus the greedy policy's
/// exact occupancy. Throws with the span residual when not converging.
ExactMdpSolution solve_average_reward_exact(const MdpInstance& mdp,
                                            double tolerance = 1e-12);

/// One sampled transition per (s, a): next_state[s][a] ~ P_a(s, .).
MdpDatum sample_xi(const MdpInstance& mdp, Rng& rng);

/// Stationary state distribution of a row-stochastic transition matrix.
Vector stationary_distribution(const Matrix& transition);

PolicyMatrix extract_policy(const Vector& y_bar, int num_states, int num_actions);

/// Exact long-run average reward of a policy; residual of the stationary
/// solve is kept below 1e-10.
double evaluate_policy(const MdpInstance& mdp, const PolicyMatrix& policy);

/// The Bellman saddle-point problem of an MDP:
///   min_x max_y <y, r> + sum_a y_a' (P_a - I) x
/// over X = {|x|_inf <= 2 t_mix} and the occupancy set with marginal window
/// [1/(sqrt(tau') |S|), sqrt(tau')/|S|], tau' = tau_inflation * tau (the
/// inflation keeps the true occupancy interior despite estimation error).
/// Norms: L2 in x, L1 in y.
class MdpSaddleProblem final : public StochasticSaddleProblem {
 public:
  MdpSaddleProblem(MdpInstance mdp, MdpConstants constants, double tau_inflation);

  const MdpInstance& instance() const { return mdp_; }
  const MdpConstants& mdp_constants() const { return constants_; }
  const ExactMdpSolution& exact_solution() const { return exact_; }

  std::string family() const override { return "mdp"; }
  int dim_x() const override { return mdp_.num_states; }
  int dim_y() const override { return mdp_.num_states * mdp_.num_actions; }
  const FeasibleSet& set_x() const override { return set_x_; }
  const FeasibleSet& set_y() const override { return set_y_; }
  NormTag norm_x() const override { return NormTag::kEuclideanL2; }
  NormTag norm_y() const override { return NormTag::kSumL1; }
  const ProblemConstants& constants() const override { return problem_constants_; }

  SampleDatum sample(Rng& rng) const override;
  double sample_value(const SampleDatum& datum, const Vector& x,
                      const Vector& y) const override;
  Vector sample_grad_x(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override;
  Vector sample_grad_y(const SampleDatum& datum, const Vector& x,
                       const Vector& y) const override;
  double sample_lipschitz_x(const SampleDatum& datum, const Vector& y) const override;
  double sample_lipschitz_y(const SampleDatum& datum, const Vector& x) const override;

  EmpiricalAggregate aggregate(const SampleSet& samples) const override;
  EmpiricalAggregate population_aggregate() const override;
  double aggregate_value(const EmpiricalAggregate& agg, const Vector& x,
                         const Vector& y) const override;
  Vector aggregate_grad_x(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override;
  Vector aggregate_grad_y(const EmpiricalAggregate& agg, const Vector& x,
                          const Vector& y) const override;
  std::optional<BestResponse> aggregate_best_response(const EmpiricalAggregate& agg,
                                                      const Regularizer& reg,
                                                      Side side,
                                                      const Vector& fixed) const override;

  bool has_population_saddle() const override { return true; }
  std::pair<Vector, Vector> population_saddle_point() const override {
    return {exact_.x_star, exact_.y_star};
  }

 private:
  void fill_constants();

  MdpInstance mdp_;
  MdpConstants constants_;
  ExactMdpSolution exact_;
  FeasibleSet set_x_;
  FeasibleSet set_y_;
  ProblemConstants problem_constants_;
};

using MdpProblemPtr = std::shared_ptr<const MdpSaddleProblem>;

MdpProblemPtr make_mdp_saddle_problem(MdpInstance mdp, MdpConstants constants,
                                      double tau_inflation = 1.05);

/// The entropy-regularized empirical objective
///   (a_x/2)|x|^2 + Phi_Gamma(x, y) - a_y sum y log y
/// with a_x = tau^{3/2} / (sqrt(n) |S| t_mix), a_y = t_mix / sqrt(n log(|S||A|)).
EmpiricalObjective build_mdp_objective(const MdpProblemPtr& problem, SampleSet samples);

struct MdpExperimentSpec {
  std::vector<int> n_grid;
  int replications = 50;
  std::uint64_t master_seed = 0;
  SolverConfig solver;
  int threads = 0;
  int extra_random_policies = 64;
  double tau_inflation = 1.05;
};

struct MdpExperimentResult {
  RateSweep sweep;  // metric "regret" = v* - v^policy, extra column residual_eq18
  double min_regret = 0.0;          // most negative regret observed
  double max_eq18_residual = 0.0;   // over all replications
  MdpConstants constants;
  ExactMdpSolution exact;
};

/// Per replication: draw n sampled transition sets, solve the regularized
/// empirical problem, extract the policy and record v* - v^policy together
/// with the stationarity-identity residual
///   |(v* - sum_a ybar_a'((P_a - I)x* + r_a)) - (Phi(xbar, y*) - Phi(x*, ybar))|
/// which is algebraically zero for exact v*, x*, y*.
MdpExperimentResult run_mdp_experiment(const MdpInstance& mdp,
                                       const MdpExperimentSpec& spec);

struct MomentEnvelopeReport {
  double grad_x_moment = 0.0;    // max over sampled y of E|grad_x Phi_xi|_2^2
  double grad_x_envelope = 0.0;  // tau^3 / |S|
  double grad_y_moment = 0.0;    // max over sampled x of E[l_y(xi, x)^2]
  double grad_y_envelope = 0.0;  // (1 + 4 t_mix)^2
  double ratio_x() const { return grad_x_moment / grad_x_envelope; }
  double ratio_y() const { return grad_y_moment / grad_y_envelope; }
};

/// Monte Carlo check of the gradient moment envelopes behind the
/// Lipschitz-constant estimates.
MomentEnvelopeReport check_mdp_moment_envelopes(const MdpProblemPtr& problem,
                                                int points, int xi_draws,
                                                std::uint64_t seed);

/// The build_mdp_objective regularizer as a rule usable by sweep harnesses;
/// valid only on MdpSaddleProblem instances.
RegularizerRule mdp_regularizer_rule();

}  // namespace esp

#endif  // ESPKIT_MDP_HPP
