// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/metrics.hpp"

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

ProblemConstants unit_constants() {
  ProblemConstants c;
  c.mu_x = c.mu_y = 1.0;
  c.lip_x_weak = c.lip_y_weak = 1.0;
  c.lip_x_strong = c.lip_y_strong = 1.0;
  c.grad_lip_x = c.grad_lip_y = c.grad_lip_xy = 1.0;
  c.diam_x = c.diam_y = 1.0;
  c.grad_second_moment_opt = 1.0;
  return c;
}

}  // namespace

TEST_CASE("closed-form bound values") {
  const Regularizer none = Regularizer::none();
  ProblemConstants c = unit_constants();

  // 2 sqrt(2)/100 * (1 + 1)
  CHECK(theoretical_bound(BoundKind::kScscWgm, c, none, 100) ==
        doctest::Approx(0.056568542494923796).epsilon(1e-14));
  // times sqrt(1/(1*1) + 1) with the strong constants: exactly 0.08
  CHECK(theoretical_bound(BoundKind::kScscSgm, c, none, 100) ==
        doctest::Approx(0.08).epsilon(1e-14));

  // regularized bound with mu = 0, nu = 1, R = 0.01:
  // 2/100 + 2/100 + 0.02 = 0.06
  ProblemConstants cc = c;
  cc.mu_x = cc.mu_y = 0.0;
  const Regularizer reg = Regularizer::quadratic_quadratic(1.0, 1.0, 0.01);
  CHECK(theoretical_bound(BoundKind::kRegularizedWgm, cc, reg, 100) ==
        doctest::Approx(0.06).epsilon(1e-14));

  // stability right side with unit constants at n = 10: sqrt(8)/10
  CHECK(theoretical_bound(BoundKind::kStabilityRhs, c, none, 10) ==
        doctest::Approx(std::sqrt(8.0) / 10.0).epsilon(1e-14));
  CHECK(theoretical_bound(BoundKind::kStabilityRhsRegularized, cc, reg, 10) ==
        doctest::Approx(std::sqrt(8.0) / 10.0).epsilon(1e-14));

  // unbounded envelopes with unit leading constant
  ProblemConstants cu = c;
  cu.mu_x = 0.5;
  cu.mu_y = 2.0;
  cu.grad_lip_x = cu.grad_lip_y = 1.0;
  cu.grad_lip_xy = 2.0;
  cu.grad_second_moment_opt = 3.0;
  const double kappa = 2.0 / 0.5;
  CHECK(theoretical_bound(BoundKind::kUnboundedD2, cu, none, 10) ==
        doctest::Approx(3.0 * kappa * kappa / (10.0 * 0.25)).epsilon(1e-14));
  CHECK(theoretical_bound(BoundKind::kUnboundedSgm, cu, none, 10) ==
        doctest::Approx(3.0 * std::pow(kappa, 4.0) / (10.0 * 0.5)).epsilon(1e-14));

  // diameter-balanced coefficients: 3 (l_x D_x + l_y D_y)/sqrt(n)
  CHECK(theoretical_bound(BoundKind::kDiameterWgm, c, none, 16) ==
        doctest::Approx(3.0 * 2.0 / 4.0).epsilon(1e-14));
}

TEST_CASE("bound properties: monotone in n, homogeneous in the constants") {
  const Regularizer none = Regularizer::none();
  const ProblemConstants c = unit_constants();
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {1, 2, 4, 8, 64, 1024}) {
    const double b = theoretical_bound(BoundKind::kScscWgm, c, none, n);
    CHECK(b < prev);
    prev = b;
  }
  ProblemConstants doubled = c;
  doubled.lip_x_weak *= 2.0;
  doubled.lip_y_weak *= 2.0;
  CHECK(theoretical_bound(BoundKind::kScscWgm, doubled, none, 50) ==
        doctest::Approx(4.0 * theoretical_bound(BoundKind::kScscWgm, c, none, 50))
            .epsilon(1e-14));
}

TEST_CASE("bound input validation names the missing assumption") {
  const Regularizer none = Regularizer::none();
  ProblemConstants c = unit_constants();
  c.mu_x = 0.0;
  try {
    theoretical_bound(BoundKind::kScscWgm, c, none, 10);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("mu_x") != std::string::npos);
  }
  ProblemConstants inf = unit_constants();
  inf.lip_x_weak = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(theoretical_bound(BoundKind::kScscWgm, inf, none, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(theoretical_bound(BoundKind::kScscWgm, unit_constants(), none, 0),
                  std::invalid_argument);
}

TEST_CASE("population saddle") {
  QuadraticSpec spec;
  spec.a_bar = vec({1.0});
  spec.b_bar = vec({0.0});
  spec.coupling = Matrix::Constant(1, 1, 1.0);
  const ProblemPtr quad = make_quadratic_scsc(spec);
  const auto [xq, yq] = population_saddle(quad, SolverConfig{});
  CHECK(xq[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(yq[0] == doctest::Approx(0.5).epsilon(1e-12));

  // decoupled: component-wise ratios
  QuadraticSpec dec;
  dec.a_bar = vec({0.8});
  dec.b_bar = vec({-0.4});
  dec.coupling = Matrix::Zero(1, 1);
  dec.mu_x = 2.0;
  dec.mu_y = 0.5;
  const auto [xd, yd] = population_saddle(make_quadratic_scsc(dec), SolverConfig{});
  CHECK(xd[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(yd[0] == doctest::Approx(-0.8).epsilon(1e-12));

  // matching pennies solves iteratively to the uniform pair
  Matrix pennies(2, 2);
  pennies << 1, -1, -1, 1;
  const auto [xg, yg] = population_saddle(make_bilinear_game(pennies, 0.0),
                                          SolverConfig{});
  CHECK((xg - vec({0.5, 0.5})).norm() < 1e-6);
  CHECK((yg - vec({0.5, 0.5})).norm() < 1e-6);
}

TEST_CASE("zero-noise problems have vanishing metrics") {
  QuadraticSpec spec;
  spec.a_bar = vec({1.0, -0.5});
  spec.b_bar = vec({0.2});
  spec.coupling = Matrix::Constant(2, 1, 0.3);
  spec.noise_scale = 0.0;
  const ProblemPtr p = make_quadratic_scsc(spec);
  EstimateOptions opts;
  opts.master_seed = 5;
  for (const auto& est : estimate_metrics(
           p, 4, 8, {MetricKind::kWgm, MetricKind::kSgm, MetricKind::kD2}, opts)) {
    CHECK(std::abs(est.mean) <= 1e-8);
  }
}

TEST_CASE("constant-in-y reduction recovers the excess risk") {
  // C = 0 and noiseless b: the y block is deterministic, so the WGM equals
  // E[f(xhat)] - min f = (mu_x/2) E|xhat - x*|^2 = noise^2 d / (6 n mu_x).
  QuadraticSpec spec;
  spec.a_bar = vec({0.3, -0.7});
  spec.b_bar = vec({0.5});
  spec.coupling = Matrix::Zero(2, 1);
  spec.mu_x = 2.0;
  spec.noise_scale = 0.9;
  spec.noise_scale_b = 0.0;
  const ProblemPtr p = make_quadratic_scsc(spec);

  const int n = 8;
  const int reps = 400;
  EstimateOptions opts;
  opts.master_seed = 11;
  const auto ests =
      estimate_metrics(p, n, reps, {MetricKind::kWgm, MetricKind::kSgm}, opts);
  const double expected = 0.9 * 0.9 * 2.0 / (6.0 * n * 2.0);
  CHECK(std::abs(ests[0].mean - expected) <=
        4.0 * ests[0].std_error + 1e-12);
  // with a deterministic y block the weak and strong measures coincide
  CHECK(std::abs(ests[0].mean - ests[1].mean) <=
        4.0 * (ests[0].std_error + ests[1].std_error) + 1e-9);
}

TEST_CASE("metric ordering on a noisy SC-SC instance") {
  Rng rng(53);
  const QuadraticSpec spec =
      random_quadratic_spec(3, 3, 1.0, 1.5, 0.6, 3.0, 3.0, rng);
  const ProblemPtr p = make_quadratic_scsc(spec);
  EstimateOptions opts;
  opts.master_seed = 21;
  const auto ests = estimate_metrics(
      p, 16, 60, {MetricKind::kD2, MetricKind::kWgm, MetricKind::kSgm}, opts);
  const double mu_min = std::min(spec.mu_x, spec.mu_y);
  CHECK(mu_min * ests[0].mean / 2.0 <= ests[1].mean + 4.0 * ests[1].std_error);
  CHECK(ests[1].mean <= ests[2].mean + 8.0 * ests[2].std_error);
  // per-replication decomposition present exactly where specified
  CHECK(ests[0].per_rep.size() == 60);
  CHECK(ests[2].per_rep.size() == 60);
  CHECK(ests[1].per_rep.empty());
}

TEST_CASE("estimator input validation") {
  QuadraticSpec spec;
  spec.a_bar = vec({1.0});
  spec.b_bar = vec({0.0});
  spec.coupling = Matrix::Zero(1, 1);
  const ProblemPtr p = make_quadratic_scsc(spec);
  EstimateOptions opts;
  CHECK_THROWS_AS(estimate_generalization(p, 0, 4, MetricKind::kWgm, opts),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_generalization(p, 4, 1, MetricKind::kWgm, opts),
                  std::invalid_argument);
}
