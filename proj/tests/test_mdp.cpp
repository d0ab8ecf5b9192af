// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/mdp.hpp"

#include <doctest.h>

#include <cmath>

using namespace esp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Brute-force oracle: best gain over all deterministic policies, each
// evaluated through its exact stationary distribution.
double enumeration_oracle(const MdpInstance& mdp) {
  const int s_count = mdp.num_states;
  const int a_count = mdp.num_actions;
  long total = 1;
  for (int s = 0; s < s_count; ++s) total *= a_count;
  double best = -1.0;
  for (long code = 0; code < total; ++code) {
    PolicyMatrix pi;
    pi.prob = Matrix::Zero(s_count, a_count);
    long rest = code;
    for (int s = 0; s < s_count; ++s) {
      pi.prob(s, static_cast<int>(rest % a_count)) = 1.0;
      rest /= a_count;
    }
    best = std::max(best, evaluate_policy(mdp, pi));
  }
  return best;
}

MdpInstance two_state_uniform_single_action() {
  MdpInstance mdp;
  mdp.num_states = 2;
  mdp.num_actions = 1;
  mdp.transitions = {(Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished()};
  mdp.rewards = (Matrix(2, 1) << 1.0, 0.0).finished();
  return mdp;
}

}  // namespace

TEST_CASE("random ergodic instances are valid and deterministic") {
  const MdpInstance a = make_random_ergodic_mdp(5, 3, 0.05, 123);
  const MdpInstance b = make_random_ergodic_mdp(5, 3, 0.05, 123);
  CHECK(mdp_to_text(a) == mdp_to_text(b));
  for (const Matrix& p : a.transitions) CHECK(p.minCoeff() >= 0.05);
  CHECK_THROWS_AS(make_random_ergodic_mdp(5, 2, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_random_ergodic_mdp(5, 2, 0.3, 1), std::invalid_argument);
}

TEST_CASE("plain-text round trip") {
  const MdpInstance a = make_random_ergodic_mdp(4, 2, 0.07, 99);
  const MdpInstance back = mdp_from_text(mdp_to_text(a));
  CHECK(mdp_to_text(back) == mdp_to_text(a));
  CHECK_THROWS_AS(mdp_from_text("garbage"), std::invalid_argument);
}

TEST_CASE("exact average-reward solutions") {
  // single state: the best action's reward
  MdpInstance single;
  single.num_states = 1;
  single.num_actions = 2;
  single.transitions = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  single.rewards = (Matrix(1, 2) << 0.3, 0.9).finished();
  const ExactMdpSolution sol = solve_average_reward_exact(single);
  CHECK(sol.v_star == doctest::Approx(0.9).epsilon(1e-12));

  // two states, one action, uniform chain: stationary (0.5, 0.5)
  const ExactMdpSolution uniform =
      solve_average_reward_exact(two_state_uniform_single_action());
  CHECK(uniform.v_star == doctest::Approx(0.5).epsilon(1e-12));

  // enumeration oracle on random instances
  for (std::uint64_t seed : {11ull, 12ull, 13ull, 14ull, 15ull}) {
    const MdpInstance mdp = make_random_ergodic_mdp(4, 3, 0.05, seed);
    const ExactMdpSolution exact = solve_average_reward_exact(mdp);
    CHECK(exact.v_star ==
          doctest::Approx(enumeration_oracle(mdp)).epsilon(1e-10));
    // the greedy policy itself evaluates to v*
    CHECK(evaluate_policy(mdp, exact.policy) ==
          doctest::Approx(exact.v_star).epsilon(1e-10));
    // occupancy is dual feasible: sum_a (I - P_a') y_a = 0
    Vector residual = Vector::Zero(mdp.num_states);
    for (int a = 0; a < mdp.num_actions; ++a) {
      const auto y_a = exact.y_star.segment(a * mdp.num_states, mdp.num_states);
      residual += y_a - mdp.transitions[a].transpose() * y_a;
    }
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("sampled transitions follow the transition law") {
  const MdpInstance mdp = make_random_ergodic_mdp(3, 2, 0.1, 7);
  Rng rng(55);
  const int draws = 100000;
  std::vector<Matrix> freq(2, Matrix::Zero(3, 3));
  for (int i = 0; i < draws; ++i) {
    const MdpDatum d = sample_xi(mdp, rng);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) freq[a](s, d.next_state(s, a)) += 1.0;
  }
  for (int a = 0; a < 2; ++a)
    for (int s = 0; s < 3; ++s)
      for (int t = 0; t < 3; ++t) {
        const double p = mdp.transitions[a](s, t);
        const double se = std::sqrt(p * (1.0 - p) / draws);
        CHECK(std::abs(freq[a](s, t) / draws - p) <= 4.0 * se + 1e-9);
      }

  // deterministic chains reproduce their transition matrix exactly
  MdpInstance det;
  det.num_states = 2;
  det.num_actions = 1;
  det.transitions = {(Matrix(2, 2) << 0, 1, 1, 0).finished()};
  det.rewards = (Matrix(2, 1) << 0.2, 0.8).finished();
  const MdpDatum d = sample_xi(det, rng);
  CHECK(d.next_state(0, 0) == 1);
  CHECK(d.next_state(1, 0) == 0);
}

TEST_CASE("mixing constants") {
  // uniform rows: stationary uniform, one-step mixing
  MdpInstance uniform;
  uniform.num_states = 3;
  uniform.num_actions = 2;
  uniform.transitions = {Matrix::Constant(3, 3, 1.0 / 3),
                         Matrix::Constant(3, 3, 1.0 / 3)};
  uniform.rewards = Matrix::Constant(3, 2, 0.5);
  const MdpConstants c = estimate_mixing_constants(uniform, 8, 3);
  CHECK(c.tau == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.t_mix == 1);
  CHECK(c.policy_set_size == 8 + 8);  // 2^3 deterministic + extras

  // symmetric two-state chain with p = 0.5 mixes in one step
  const MdpConstants sym =
      estimate_mixing_constants(two_state_uniform_single_action(), 0, 1);
  CHECK(sym.t_mix == 1);
  CHECK(sym.policy_set_size == 1);

  // scanning more policies can only push the estimates up
  const MdpInstance mdp = make_random_ergodic_mdp(4, 3, 0.05, 17);
  const MdpConstants few = estimate_mixing_constants(mdp, 0, 9);
  const MdpConstants more = estimate_mixing_constants(mdp, 64, 9);
  CHECK(more.tau >= few.tau);
  CHECK(more.t_mix >= few.t_mix);
  CHECK(more.policy_set_size > few.policy_set_size);
}

TEST_CASE("policy extraction and evaluation") {
  // y = [[0.2, 0.3], [0.1, 0.4]] row-normalizes to [[0.4, 0.6], [0.2, 0.8]]
  const Vector y = vec({0.2, 0.1, 0.3, 0.4});  // action-major (s, a) layout
  const PolicyMatrix pi = extract_policy(y, 2, 2);
  CHECK(pi.prob(0, 0) == doctest::Approx(0.4));
  CHECK(pi.prob(0, 1) == doctest::Approx(0.6));
  CHECK(pi.prob(1, 0) == doctest::Approx(0.2));
  CHECK(pi.prob(1, 1) == doctest::Approx(0.8));
  for (int s = 0; s < 2; ++s) CHECK(pi.prob.row(s).sum() == doctest::Approx(1.0));

  // uniform occupancy gives the uniform policy
  const PolicyMatrix uni = extract_policy(Vector::Constant(4, 0.25), 2, 2);
  CHECK(uni.prob(0, 0) == doctest::Approx(0.5));

  // single action: the all-ones policy
  const PolicyMatrix one = extract_policy(vec({0.7, 0.3}), 2, 1);
  CHECK(one.prob.col(0).minCoeff() == doctest::Approx(1.0));

  CHECK(evaluate_policy(two_state_uniform_single_action(), one) ==
        doctest::Approx(0.5));
}

TEST_CASE("regularizer coefficients follow the sample-size rule") {
  const MdpInstance mdp = make_random_ergodic_mdp(5, 2, 0.08, 21);
  const MdpConstants constants = estimate_mixing_constants(mdp, 16, 5);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  const int n = 64;
  const EmpiricalObjective obj =
      build_mdp_objective(problem, problem->draw_samples(3, n));
  const Regularizer& reg = obj.regularizer();
  const double s_count = 5.0;
  CHECK(reg.alpha_x() == doctest::Approx(std::pow(constants.tau, 1.5) /
                                         (std::sqrt(double(n)) * s_count *
                                          constants.t_mix))
                             .epsilon(1e-14));
  CHECK(reg.alpha_y() == doctest::Approx(constants.t_mix /
                                         std::sqrt(n * std::log(10.0)))
                             .epsilon(1e-14));

  // worked example of the coefficient formulas: t_mix = 2, tau = 2, |S| = 5,
  // |A| = 2, n = 100
  const double ax = std::pow(2.0, 1.5) / (10.0 * 5.0 * 2.0);
  const double ay = 2.0 / std::sqrt(100.0 * std::log(10.0));
  CHECK(ax == doctest::Approx(0.028284).epsilon(1e-4));
  CHECK(ay == doctest::Approx(0.13180).epsilon(1e-3));
}

TEST_CASE("sampled objective: single-datum aggregate identity and mean") {
  const MdpInstance mdp = make_random_ergodic_mdp(4, 2, 0.08, 51);
  const MdpConstants constants = estimate_mixing_constants(mdp, 8, 9);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  Rng rng(5);

  // one-hot aggregate of a single datum evaluates identically to the datum
  for (int trial = 0; trial < 20; ++trial) {
    SampleSet one;
    one.data.push_back(problem->sample(rng));
    const EmpiricalAggregate agg = problem->aggregate(one);
    const Vector x = sample_point(problem->set_x(), rng);
    const Vector y = sample_point(problem->set_y(), rng);
    CHECK(problem->sample_value(one.data[0], x, y) ==
          doctest::Approx(problem->aggregate_value(agg, x, y)).epsilon(1e-12));
  }

  // Monte Carlo mean of the sampled objective approaches the population
  const PopulationObjective pop(problem);
  const Vector x = sample_point(problem->set_x(), rng);
  const Vector y = sample_point(problem->set_y(), rng);
  const int draws = 20000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = problem->sample_value(problem->sample(rng), x, y);
    const double delta = v - mean;
    mean += delta / (i + 1);
    m2 += delta * (v - mean);
  }
  const double se = std::sqrt(m2 / (draws - 1.0) / draws);
  CHECK(std::abs(mean - pop.value(x, y)) <= 4.0 * se + 1e-12);

  // non-mixing chains are rejected with an identifying error: a cyclic
  // deterministic chain never closes the TV gap
  MdpInstance cyclic;
  cyclic.num_states = 3;
  cyclic.num_actions = 1;
  Matrix p0 = Matrix::Zero(3, 3);
  p0(0, 1) = p0(1, 2) = p0(2, 0) = 1.0;
  cyclic.transitions = {p0};
  cyclic.rewards = Matrix::Constant(3, 1, 0.5);
  CHECK_THROWS_AS(estimate_mixing_constants(cyclic, 0, 1), std::runtime_error);
}

TEST_CASE("sampled gradients match finite differences") {
  const MdpInstance mdp = make_random_ergodic_mdp(4, 2, 0.06, 33);
  const MdpConstants constants = estimate_mixing_constants(mdp, 8, 2);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  Rng rng(77);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const SampleDatum datum = problem->sample(rng);
    const Vector x = sample_point(problem->set_x(), rng);
    const Vector y = sample_point(problem->set_y(), rng);
    const Vector gx = problem->sample_grad_x(datum, x, y);
    const Vector gy = problem->sample_grad_y(datum, x, y);
    for (int i = 0; i < problem->dim_x(); ++i) {
      Vector hi = x, lo = x;
      hi[i] += h;
      lo[i] -= h;
      const double fd = (problem->sample_value(datum, hi, y) -
                         problem->sample_value(datum, lo, y)) /
                        (2.0 * h);
      CHECK(std::abs(fd - gx[i]) <= 1e-6 * (1.0 + std::abs(gx[i])));
    }
    for (int j = 0; j < problem->dim_y(); ++j) {
      Vector hi = y, lo = y;
      hi[j] += h;
      lo[j] -= h;
      const double fd = (problem->sample_value(datum, x, hi) -
                         problem->sample_value(datum, x, lo)) /
                        (2.0 * h);
      CHECK(std::abs(fd - gy[j]) <= 1e-6 * (1.0 + std::abs(gy[j])));
    }
  }
}

TEST_CASE("best responses dominate random feasible points") {
  const MdpInstance mdp = make_random_ergodic_mdp(4, 2, 0.06, 44);
  const MdpConstants constants = estimate_mixing_constants(mdp, 8, 2);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  const SampleSet samples = problem->draw_samples(9, 16);
  const EmpiricalObjective obj = build_mdp_objective(problem, samples);
  const PopulationObjective pop(problem);

  Rng rng(88);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = sample_point(problem->set_x(), rng);
    const Vector y = sample_point(problem->set_y(), rng);

    // regularized objective: entropy-in-y maximizer, quadratic-in-x minimizer
    const auto up = obj.exact_best_response(Side::kMaximizeY, x);
    REQUIRE(up.has_value());
    CHECK(problem->set_y().contains(up->point, 1e-8));
    CHECK(up->value >= obj.value(x, y) - 1e-10);

    const auto low = obj.exact_best_response(Side::kMinimizeX, y);
    REQUIRE(low.has_value());
    CHECK(problem->set_x().contains(low->point, 1e-9));
    CHECK(low->value <= obj.value(x, y) + 1e-10);

    // population (linear) objective: greedy capped allocation
    const auto pup = pop.exact_best_response(Side::kMaximizeY, x);
    REQUIRE(pup.has_value());
    CHECK(problem->set_y().contains(pup->point, 1e-9));
    CHECK(pup->value >= pop.value(x, y) - 1e-10);
  }
}

TEST_CASE("small end-to-end experiment") {
  const MdpInstance mdp = make_random_ergodic_mdp(3, 2, 0.1, 3);
  MdpExperimentSpec spec;
  spec.n_grid = {8, 32};
  spec.replications = 4;
  spec.master_seed = 17;
  const MdpExperimentResult result = run_mdp_experiment(mdp, spec);
  REQUIRE(result.sweep.rows.size() == 2);
  CHECK(result.max_eq18_residual <= 1e-8);
  CHECK(result.min_regret >= -1e-8);
  CHECK(result.sweep.extra_column == "residual_eq18");
  for (const RateRow& row : result.sweep.rows) CHECK(row.bound > 0.0);

  // Single-state chain: transitions carry no information, so the only error
  // left is the entropy regularization bias, bounded by alpha_y log|A| per
  // the softmax temperature and shrinking like 1/sqrt(n).
  MdpInstance single;
  single.num_states = 1;
  single.num_actions = 2;
  single.transitions = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)};
  single.rewards = (Matrix(1, 2) << 0.3, 0.9).finished();
  MdpExperimentSpec sspec;
  sspec.n_grid = {4, 4096};
  sspec.replications = 3;
  sspec.master_seed = 9;
  const MdpExperimentResult sres = run_mdp_experiment(single, sspec);
  for (const RateRow& row : sres.sweep.rows) {
    const double alpha_y =
        sres.constants.t_mix / std::sqrt(row.n * std::log(2.0));
    CHECK(row.mean >= -1e-10);
    CHECK(row.mean <= alpha_y * std::log(2.0) + 1e-10);
  }
  CHECK(sres.sweep.rows[1].mean < sres.sweep.rows[0].mean);
}

TEST_CASE("moment envelopes hold on a sampled instance") {
  const MdpInstance mdp = make_random_ergodic_mdp(5, 2, 0.08, 71);
  const MdpConstants constants = estimate_mixing_constants(mdp, 16, 4);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  const MomentEnvelopeReport report =
      check_mdp_moment_envelopes(problem, 10, 500, 13);
  CHECK(report.ratio_x() <= 10.0);
  CHECK(report.grad_y_moment <= report.grad_y_envelope);
}
