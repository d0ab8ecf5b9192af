// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include <benchmark/benchmark.h>

#include "espkit/games.hpp"
#include "espkit/mdp.hpp"
#include "espkit/solver.hpp"

namespace {

using namespace esp;

void BM_QuadraticClosedForm(benchmark::State& state) {
  Rng rng(11);
  const ProblemPtr p = make_quadratic_scsc(
      random_quadratic_spec(static_cast<int>(state.range(0)),
                            static_cast<int>(state.range(0)), 1.0, 1.0, 0.5,
                            0.0, 0.0, rng));
  const EmpiricalObjective obj(p, p->draw_samples(7, 16), Regularizer::none());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_quadratic_closed_form(obj));
  }
}
BENCHMARK(BM_QuadraticClosedForm)->Arg(3)->Arg(10)->Arg(30);

void BM_MirrorProxQuadratic(benchmark::State& state) {
  Rng rng(12);
  const ProblemPtr p = make_quadratic_scsc(
      random_quadratic_spec(3, 3, 1.0, 1.0, 0.5, 3.0, 3.0, rng));
  const EmpiricalObjective obj(p, p->draw_samples(7, 16), Regularizer::none());
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_mirror_prox(obj, cfg));
  }
}
BENCHMARK(BM_MirrorProxQuadratic);

void BM_MirrorProxGameResp(benchmark::State& state) {
  const GameInstance game =
      make_random_game_instance(10, 10, 0.5, 13);
  const int n = static_cast<int>(state.range(0));
  const EmpiricalObjective obj =
      build_game_objective(game.problem, game.problem->draw_samples(3, n));
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_mirror_prox(obj, cfg));
  }
}
BENCHMARK(BM_MirrorProxGameResp)->Arg(64)->Arg(1024);

void BM_MirrorProxMdpResp(benchmark::State& state) {
  const MdpInstance mdp = make_random_ergodic_mdp(5, 2, 0.1, 14);
  const MdpConstants constants = estimate_mixing_constants(mdp, 32, 15);
  const MdpProblemPtr problem = make_mdp_saddle_problem(mdp, constants);
  const int n = static_cast<int>(state.range(0));
  const EmpiricalObjective obj =
      build_mdp_objective(problem, problem->draw_samples(9, n));
  SolverConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_mirror_prox(obj, cfg));
  }
}
BENCHMARK(BM_MirrorProxMdpResp)->Arg(64)->Arg(1024);

void BM_AverageRewardExact(benchmark::State& state) {
  const MdpInstance mdp = make_random_ergodic_mdp(
      static_cast<int>(state.range(0)), 3, 0.01, 16);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_average_reward_exact(mdp));
  }
}
BENCHMARK(BM_AverageRewardExact)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
