// Copyright 2026 The lexplain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP for every kernel. The second benchmark
// argument selects the path: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cmath>

#include "lexplain/attribution/scoring.hpp"
#include "lexplain/kernels.hpp"
#include "lexplain/random.hpp"

namespace lx = lexplain;
namespace k = lexplain::kernels;

namespace {

k::Execution execution(const benchmark::State& state) {
  return state.range(1) == 0 ? k::Execution::kSerial : k::Execution::kParallel;
}

lx::Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  lx::Rng rng(seed);
  lx::Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_MapIndexed(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto f = [](std::size_t i) {
    double acc = 0.0;
    for (int j = 0; j < 200; ++j) acc += std::sin(static_cast<double>(i + static_cast<std::size_t>(j)));
    return acc;
  };
  for (auto _ : state) benchmark::DoNotOptimize(k::map_indexed(n, f, execution(state)));
}

void BM_AssignNearest(benchmark::State& state) {
  const lx::Mat pts = random_mat(state.range(0), 32, 1);
  const lx::Mat cen = random_mat(64, 32, 2);
  std::vector<int> labels;
  for (auto _ : state) benchmark::DoNotOptimize(k::assign_nearest(pts, cen, labels, execution(state)));
}

void BM_NnlsRows(benchmark::State& state) {
  const lx::Mat d = random_mat(16, 32, 3).cwiseAbs();
  const lx::Mat b = random_mat(state.range(0), 32, 4);
  const lx::Mat gram = d * d.transpose();
  const lx::Mat rhs = b * d.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(k::nnls_rows(gram, rhs, 100, 1e-12, execution(state)));
}

void BM_TopkRows(benchmark::State& state) {
  const lx::Mat v = random_mat(state.range(0), 128, 5);
  for (auto _ : state) benchmark::DoNotOptimize(k::topk_rows(v, 8, execution(state)));
}

void BM_ScoreBatch(benchmark::State& state) {
  const auto model = lx::make_tiny_transformer(lx::Task::kClassification);
  const auto tok = lx::builtin_tokenizer(false);
  lx::TargetScorer scorer(model, lx::Target::for_class(1), lx::InferenceMode::kLogits, {}, 64);
  const auto ids = tok->encode("the acting was wonderful but the plot was dull and the ending was long").token_ids;
  const std::vector<std::vector<lx::TokenId>> prompts(static_cast<std::size_t>(state.range(0)), ids);
  for (auto _ : state) benchmark::DoNotOptimize(scorer.score_batch(prompts, execution(state)));
}

}  // namespace

BENCHMARK(BM_MapIndexed)->ArgsProduct({{4096, 65536}, {0, 1}});
BENCHMARK(BM_AssignNearest)->ArgsProduct({{4096, 32768}, {0, 1}});
BENCHMARK(BM_NnlsRows)->ArgsProduct({{1024, 8192}, {0, 1}});
BENCHMARK(BM_TopkRows)->ArgsProduct({{4096, 32768}, {0, 1}});
BENCHMARK(BM_ScoreBatch)->ArgsProduct({{64, 512}, {0, 1}});

BENCHMARK_MAIN();
