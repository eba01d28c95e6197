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

#include <gtest/gtest.h>

#include "lexplain/attribution/scoring.hpp"
#include "lexplain/kernels.hpp"
#include "lexplain/random.hpp"
#include "support.hpp"

namespace lx = lexplain;
namespace k = lexplain::kernels;

namespace {

lx::Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  lx::Rng rng(seed);
  lx::Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST(Kernels, MapIndexedBitwise) {
  auto f = [](std::size_t i) { return std::sin(static_cast<double>(i) * 0.37) * std::exp(-1e-3 * i); };
  EXPECT_EQ(k::map_indexed(5000, f, k::Execution::kSerial), k::map_indexed(5000, f, k::Execution::kParallel));
}

TEST(Kernels, AssignNearestBitwise) {
  const lx::Mat pts = random_mat(2000, 8, 1);
  const lx::Mat cen = random_mat(16, 8, 2);
  std::vector<int> a, b;
  const double ia = k::assign_nearest(pts, cen, a, k::Execution::kSerial);
  const double ib = k::assign_nearest(pts, cen, b, k::Execution::kParallel);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ia, ib);
}

TEST(Kernels, AssignNearestTiesGoLow) {
  lx::Mat pts(1, 1);
  pts << 0.0;
  lx::Mat cen(2, 1);
  cen << 1.0, -1.0;
  std::vector<int> labels;
  EXPECT_DOUBLE_EQ(k::assign_nearest(pts, cen, labels), 1.0);
  EXPECT_EQ(labels[0], 0);
}

TEST(Kernels, NnlsBitwiseAndNonnegative) {
  const lx::Mat d = random_mat(6, 10, 3).cwiseAbs();
  const lx::Mat b = random_mat(300, 10, 4);
  const lx::Mat gram = d * d.transpose();
  const lx::Mat rhs = b * d.transpose();
  const lx::Mat s = k::nnls_rows(gram, rhs, 500, 1e-12, k::Execution::kSerial);
  const lx::Mat p = k::nnls_rows(gram, rhs, 500, 1e-12, k::Execution::kParallel);
  EXPECT_TRUE(s == p);
  EXPECT_GE(s.minCoeff(), 0.0);
}

TEST(Kernels, NnlsRecoversNonnegativeSolution) {
  const lx::Mat d = random_mat(4, 12, 5).cwiseAbs();
  lx::Mat t(1, 4);
  t << 0.5, 0.0, 2.0, 1.0;
  const lx::Mat b = t * d;
  const lx::Mat s = k::nnls_rows(d * d.transpose(), b * d.transpose(), 5000, 1e-14);
  EXPECT_LT((s - t).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Kernels, TopkMatchesSortOracle) {
  const lx::Mat v = random_mat(200, 8, 6);
  const lx::Mat out = k::topk_rows(v, 2, k::Execution::kParallel);
  EXPECT_TRUE(out == k::topk_rows(v, 2, k::Execution::kSerial));
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    std::vector<std::pair<double, Eigen::Index>> row;
    for (Eigen::Index c = 0; c < v.cols(); ++c) row.push_back({v(r, c), c});
    std::sort(row.begin(), row.end(), [](auto a, auto b) { return a.first > b.first; });
    int nonzero = 0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) nonzero += out(r, c) != 0.0;
    EXPECT_EQ(nonzero, 2);
    EXPECT_EQ(out(r, row[0].second), row[0].first);
    EXPECT_EQ(out(r, row[1].second), row[1].first);
  }
}

TEST(Kernels, ScoreBatchBitwise) {
  const auto m = lx::make_tiny_transformer(lx::Task::kClassification);
  lx::TargetScorer scorer(m, lx::Target::for_class(1), lx::InferenceMode::kSoftmax, {}, 8);
  const auto t = lxtest::cls_tokenizer();
  std::vector<std::vector<lx::TokenId>> prompts;
  for (const char* s : {"great movie", "the plot was dull", "a wonderful ending", "this was bad", "i loved it"})
    for (int rep = 0; rep < 5; ++rep) prompts.push_back(t->encode(s).token_ids);
  const auto a = scorer.score_batch(prompts, k::Execution::kSerial);
  const auto b = scorer.score_batch(prompts, k::Execution::kParallel);
  EXPECT_EQ(a, b);
  EXPECT_EQ(scorer.model_calls(), 2 * prompts.size());
  EXPECT_EQ(a[0], scorer.score(prompts[0]));
}
