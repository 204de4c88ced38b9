// Copyright 2026 The wineqc Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference kernels against their OpenMP counterparts. Run with
// OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "wineqc/boost.hpp"
#include "wineqc/kernels.hpp"

namespace {

using wineqc::ExecPolicy;

wineqc::Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  wineqc::Rng rng(seed);
  wineqc::Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = wineqc::uniform01(rng);
  }
  return x;
}

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(1) == 0 ? ExecPolicy::kSerial : ExecPolicy::kParallel;
}

void BM_NearestNeighbor(benchmark::State& state) {
  const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 11, 1);
  const ExecPolicy policy = policy_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(wineqc::kernels::nearest_neighbor(x, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KnnWithin(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(n, 11, 2);
  std::vector<std::size_t> members(n / 4);
  std::iota(members.begin(), members.end(), 0);
  const ExecPolicy policy = policy_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wineqc::kernels::knn_within(x, members, 5, policy));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(members.size()));
}

void BM_BuildHistogram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(n, 11, 3);
  const wineqc::BinnedMatrix binned = wineqc::bin_matrix(wineqc::fit_bins(x, 256), x);
  wineqc::Rng rng(4);
  std::vector<double> g(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = wineqc::uniform01(rng) - 0.5;
    h[i] = wineqc::uniform01(rng);
  }
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0U);
  std::vector<std::size_t> features(11);
  std::iota(features.begin(), features.end(), 0);
  std::vector<wineqc::HistBin> hist(binned.total_bins());
  const ExecPolicy policy = policy_of(state);
  for (auto _ : state) {
    wineqc::kernels::build_histogram(binned, rows, g, h, features, hist, policy);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

// Second argument: 0 serial reference, 1 OpenMP.
BENCHMARK(BM_NearestNeighbor)->ArgsProduct({{500, 2000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnWithin)->ArgsProduct({{1000, 4000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildHistogram)->ArgsProduct({{1600, 50000}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
