// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#include <benchmark/benchmark.h>

#include "espkit/geometry.hpp"
#include "espkit/rng.hpp"

namespace {

using esp::FeasibleSet;
using esp::Vector;

void BM_SimplexProjection(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  esp::Rng rng(1);
  Vector p(dim);
  for (int i = 0; i < dim; ++i) p[i] = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(esp::project_simplex(p));
  }
}
BENCHMARK(BM_SimplexProjection)->Arg(8)->Arg(64)->Arg(512);

void BM_EntropyMirrorStep(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  esp::Rng rng(2);
  Vector p = Vector::Constant(dim, 1.0 / dim);
  Vector g(dim);
  for (int i = 0; i < dim; ++i) g[i] = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(esp::entropy_mirror_step(p, g, 0.5));
  }
}
BENCHMARK(BM_EntropyMirrorStep)->Arg(8)->Arg(64)->Arg(512);

void BM_OccupancyEuclideanProjection(benchmark::State& state) {
  const int states = static_cast<int>(state.range(0));
  const FeasibleSet set = FeasibleSet::occupancy(states, 2, 0.5 / states,
                                                 2.0 / states);
  esp::Rng rng(3);
  Vector p(set.dim());
  for (int i = 0; i < set.dim(); ++i) p[i] = rng.uniform(0.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(set.project(p));
  }
}
BENCHMARK(BM_OccupancyEuclideanProjection)->Arg(5)->Arg(20);

void BM_OccupancyEntropyProjection(benchmark::State& state) {
  const int states = static_cast<int>(state.range(0));
  const FeasibleSet set = FeasibleSet::occupancy(states, 2, 0.5 / states,
                                                 2.0 / states);
  esp::Rng rng(4);
  Vector q(set.dim());
  for (int i = 0; i < set.dim(); ++i) q[i] = rng.uniform01() + 1e-9;
  q /= q.sum();
  for (auto _ : state) {
    benchmark::DoNotOptimize(set.project_entropy(q));
  }
}
BENCHMARK(BM_OccupancyEntropyProjection)->Arg(5)->Arg(20);

}  // namespace
