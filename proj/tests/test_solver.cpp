// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include "espkit/solver.hpp"

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

ProblemPtr matching_pennies() {
  Matrix a(2, 2);
  a << 1, -1, -1, 1;
  return make_bilinear_game(a, 0.0);
}

// A function that is strongly convex in x and constant in y: the saddle
// problem degenerates to plain minimization.
class ConstantInY final : public SaddleFunction {
 public:
  ConstantInY() : sx_(FeasibleSet::linf_box(2, 2.0)), sy_(FeasibleSet::linf_box(1, 1.0)) {}
  const FeasibleSet& set_x() const override { return sx_; }
  const FeasibleSet& set_y() const override { return sy_; }
  double value(const Vector& x, const Vector&) const override {
    return (x - vec({1.0, -0.5})).squaredNorm();
  }
  Vector grad_x(const Vector& x, const Vector&) const override {
    return 2.0 * (x - vec({1.0, -0.5}));
  }
  Vector grad_y(const Vector&, const Vector& y) const override {
    return Vector::Zero(y.size());
  }

 private:
  FeasibleSet sx_;
  FeasibleSet sy_;
};

}  // namespace

TEST_CASE("mirror prox solves deterministic matching pennies") {
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective obj(game, game->draw_samples(1, 1), Regularizer::none());
  SolverConfig cfg;
  cfg.gap_tol = 1e-6;
  cfg.max_iter = 5000;
  const SaddleSolution sol = solve_mirror_prox(obj, cfg);
  CHECK(sol.converged);
  CHECK(sol.certified_gap <= 1e-6);
  CHECK((sol.x_hat - vec({0.5, 0.5})).norm() < 1e-3);
  CHECK((sol.y_hat - vec({0.5, 0.5})).norm() < 1e-3);
}

TEST_CASE("mirror prox converges from an off-center start") {
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective obj(game, game->draw_samples(1, 1), Regularizer::none());
  SolverConfig cfg;
  cfg.gap_tol = 1e-3;
  cfg.max_iter = 50000;
  cfg.init_x = vec({0.9, 0.1});
  cfg.init_y = vec({0.2, 0.8});
  const SaddleSolution sol = solve_mirror_prox(obj, cfg);
  CHECK(sol.converged);
  CHECK(sol.certified_gap <= 1e-3);
  CHECK((sol.x_hat - vec({0.5, 0.5})).lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("mirror prox agrees with the closed-form quadratic solver") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const QuadraticSpec spec =
        random_quadratic_spec(3, 2, 1.0, 1.2, 0.6, 0.0, 0.0, rng);
    const ProblemPtr p = make_quadratic_scsc(spec);
    const EmpiricalObjective obj(p, p->draw_samples(100 + trial, 4),
                                 Regularizer::none());
    const SaddleSolution exact = solve_quadratic_closed_form(obj);
    CHECK(exact.certified_gap <= 1e-8);
    SolverConfig cfg;
    cfg.gap_tol = 1e-12;
    const SaddleSolution iterative = solve_mirror_prox(obj, cfg);
    CHECK(iterative.converged);
    CHECK((iterative.x_hat - exact.x_hat).norm() < 1e-6);
    CHECK((iterative.y_hat - exact.y_hat).norm() < 1e-6);
  }
}

TEST_CASE("closed-form solver handles quadratic regularizers and rejects misuse") {
  QuadraticSpec spec;
  spec.a_bar = vec({1.0});
  spec.b_bar = vec({0.0});
  spec.coupling = Matrix::Zero(1, 1);
  const ProblemPtr p = make_quadratic_scsc(spec);
  SampleSet samples = p->draw_samples(1, 1);

  // modulus shift: alpha = 1 halves the decoupled solution
  const EmpiricalObjective reg_obj(
      p, samples, Regularizer::quadratic_quadratic(1.0, 1.0, 1.0));
  const SaddleSolution sol = solve_quadratic_closed_form(reg_obj);
  CHECK(sol.x_hat[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.y_hat[0] == doctest::Approx(0.0).epsilon(1e-12));

  // bounded sets are rejected
  QuadraticSpec bounded = spec;
  bounded.box_radius_x = 4.0;
  bounded.box_radius_y = 4.0;
  const ProblemPtr pb = make_quadratic_scsc(bounded);
  const EmpiricalObjective bounded_obj(pb, pb->draw_samples(1, 1),
                                       Regularizer::none());
  CHECK_THROWS_AS(solve_quadratic_closed_form(bounded_obj), std::domain_error);

  // non-quadratic families are rejected
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective game_obj(game, game->draw_samples(1, 1),
                                    Regularizer::none());
  CHECK_THROWS_AS(solve_quadratic_closed_form(game_obj), std::domain_error);
}

TEST_CASE("best responses") {
  // vertex maximization on the bilinear game
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective obj(game, game->draw_samples(1, 1), Regularizer::none());
  const BestResponse br =
      best_response(obj, vec({1.0, 0.0}), Side::kMaximizeY, SolverConfig{});
  CHECK(br.value == doctest::Approx(1.0));
  CHECK((br.point - vec({1.0, 0.0})).norm() < 1e-12);

  // quadratic best response is the clipped first-order solution
  QuadraticSpec spec;
  spec.a_bar = vec({0.0});
  spec.b_bar = vec({2.0});
  spec.coupling = Matrix::Constant(1, 1, 1.0);
  spec.box_radius_x = 4.0;
  spec.box_radius_y = 1.0;  // saddle y* = (2 + x*)/mu_y must stay interior
  spec.mu_y = 4.0;
  const ProblemPtr quad = make_quadratic_scsc(spec);
  const EmpiricalObjective qobj(quad, quad->draw_samples(2, 1),
                                Regularizer::none());
  const BestResponse clipped =
      best_response(qobj, vec({3.0}), Side::kMaximizeY, SolverConfig{});
  CHECK(clipped.point[0] == doctest::Approx(std::min((2.0 + 3.0) / 4.0, 1.0)));

  // constant objective: fallback returns a feasible point with the value
  const ConstantInY flat;
  const BestResponse any =
      best_response(flat, vec({0.3, 0.3}), Side::kMaximizeY, SolverConfig{});
  CHECK(flat.set_y().contains(any.point, 1e-9));
  CHECK(any.value == doctest::Approx(flat.value(vec({0.3, 0.3}), any.point)));
}

TEST_CASE("duality gap examples and properties") {
  // at the closed-form solution the gap is ~0
  Rng rng(43);
  const QuadraticSpec spec =
      random_quadratic_spec(2, 2, 1.0, 1.0, 0.5, 0.0, 0.0, rng);
  const ProblemPtr p = make_quadratic_scsc(spec);
  const EmpiricalObjective obj(p, p->draw_samples(17, 8), Regularizer::none());
  const SaddleSolution sol = solve_quadratic_closed_form(obj);
  CHECK(empirical_duality_gap(obj, sol.x_hat, sol.y_hat) <= 1e-8);

  // matching pennies at ((1,0),(1,0)): max_y x'Ay = 1, min_x x'Ay = -1
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective gobj(game, game->draw_samples(1, 1),
                                Regularizer::none());
  CHECK(empirical_duality_gap(gobj, vec({1.0, 0.0}), vec({1.0, 0.0})) ==
        doctest::Approx(2.0));

  // constant objective has zero gap everywhere
  const ConstantInY flat;
  CHECK(empirical_duality_gap(flat, vec({1.0, -0.5}), vec({0.2})) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // nonnegativity at random feasible pairs
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = sample_point(game->set_x(), rng);
    const Vector y = sample_point(game->set_y(), rng);
    CHECK(empirical_duality_gap(gobj, x, y) >= -1e-9);
  }

  // infeasible arguments are rejected
  CHECK_THROWS_AS(empirical_duality_gap(gobj, vec({2.0, -1.0}), vec({0.5, 0.5})),
                  std::invalid_argument);
}

TEST_CASE("degenerate objective constant in y reduces to minimization") {
  const ConstantInY flat;
  SolverConfig cfg;
  cfg.gap_tol = 1e-7;
  const SaddleSolution sol = solve_mirror_prox(flat, cfg);
  CHECK(sol.converged);
  CHECK((sol.x_hat - vec({1.0, -0.5})).norm() < 1e-3);
  CHECK(flat.set_y().contains(sol.y_hat, 1e-9));
  // the gap tracks only x-suboptimality
  CHECK(empirical_duality_gap(flat, vec({0.0, 0.0}), sol.y_hat) ==
        doctest::Approx(flat.value(vec({0.0, 0.0}), sol.y_hat)));
}

TEST_CASE("saddle certificate at converged solutions") {
  Rng rng(47);
  const QuadraticSpec spec =
      random_quadratic_spec(2, 2, 1.0, 1.0, 0.5, 3.0, 3.0, rng);
  const ProblemPtr p = make_quadratic_scsc(spec);
  const EmpiricalObjective obj(p, p->draw_samples(5, 6), Regularizer::none());
  SolverConfig cfg;
  cfg.gap_tol = 1e-9;
  const SaddleSolution sol = solve_mirror_prox(obj, cfg);
  REQUIRE(sol.converged);
  CHECK(p->set_x().contains(sol.x_hat, 1e-9));
  CHECK(p->set_y().contains(sol.y_hat, 1e-9));
  const double v = obj.value(sol.x_hat, sol.y_hat);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = sample_point(p->set_x(), rng);
    const Vector y = sample_point(p->set_y(), rng);
    CHECK(obj.value(sol.x_hat, y) <= v + 1e-9);
    CHECK(obj.value(x, sol.y_hat) >= v - 1e-9);
  }
}

TEST_CASE("iteration budget exhaustion reports non-convergence") {
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective obj(game, game->draw_samples(1, 1), Regularizer::none());
  SolverConfig cfg;
  cfg.gap_tol = 1e-12;
  cfg.max_iter = 3;
  cfg.gap_check_every = 1;
  cfg.init_x = vec({0.9, 0.1});
  cfg.init_y = vec({0.2, 0.8});
  const SaddleSolution sol = solve_mirror_prox(obj, cfg);
  CHECK_FALSE(sol.converged);
  CHECK(sol.iterations == 3);
  CHECK(game->set_x().contains(sol.x_hat, 1e-9));
}

TEST_CASE("fixed step rule converges on well-conditioned instances") {
  Rng rng(59);
  const QuadraticSpec spec =
      random_quadratic_spec(2, 2, 1.0, 1.0, 0.4, 0.0, 0.0, rng);
  const ProblemPtr p = make_quadratic_scsc(spec);
  const EmpiricalObjective obj(p, p->draw_samples(4, 4), Regularizer::none());
  SolverConfig cfg;
  cfg.step_rule = StepRule::kFixed;
  cfg.fixed_step = 0.3;
  cfg.gap_tol = 1e-10;
  const SaddleSolution sol = solve_mirror_prox(obj, cfg);
  CHECK(sol.converged);
  const SaddleSolution exact = solve_quadratic_closed_form(obj);
  CHECK((sol.x_hat - exact.x_hat).norm() < 1e-4);
}

TEST_CASE("oversized fixed steps raise the divergence diagnostic") {
  Rng rng(67);
  const QuadraticSpec spec =
      random_quadratic_spec(2, 2, 1.0, 1.0, 0.4, 0.0, 0.0, rng);
  const ProblemPtr p = make_quadratic_scsc(spec);
  const EmpiricalObjective obj(p, p->draw_samples(4, 4), Regularizer::none());
  SolverConfig cfg;
  cfg.step_rule = StepRule::kFixed;
  cfg.fixed_step = 10.0;  // far beyond 1/L
  cfg.gap_tol = 1e-10;
  cfg.gap_check_every = 5;
  CHECK_THROWS_AS(solve_mirror_prox(obj, cfg), std::runtime_error);
}

TEST_CASE("solver configuration guards") {
  const ProblemPtr game = matching_pennies();
  const EmpiricalObjective obj(game, game->draw_samples(1, 1), Regularizer::none());
  SolverConfig cfg;
  cfg.init_x = vec({2.0, -1.0});
  CHECK_THROWS_AS(solve_mirror_prox(obj, cfg), std::invalid_argument);

  Rng rng(3);
  const QuadraticSpec spec =
      random_quadratic_spec(2, 2, 1.0, 1.0, 0.1, 2.0, 2.0, rng);
  const ProblemPtr quad = make_quadratic_scsc(spec);
  const EmpiricalObjective qobj(quad, quad->draw_samples(1, 1),
                                Regularizer::none());
  SolverConfig entropy_on_box;
  entropy_on_box.geometry_x = ProxGeometry::kEntropy;
  CHECK_THROWS_AS(solve_mirror_prox(qobj, entropy_on_box), std::invalid_argument);
}
