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

#include <algorithm>
#include <numeric>

#include "lexplain/attribution/metrics.hpp"
#include "support.hpp"

namespace lx = lexplain;

namespace {

// Weights (3, 2, 1) over the three words of "great good fine".
struct Analytic {
  std::shared_ptr<const lx::Tokenizer> tokenizer = lxtest::cls_tokenizer();
  lx::TokenizedText tok;
  lx::TargetScorer scorer;
  explicit Analytic(std::map<std::string, double> w = {{"great", 3.0}, {"good", 2.0}, {"fine", 1.0}},
                    std::string text = "great good fine", double bias = 0.0)
      : tok(tokenizer->encode(text)),
        scorer(lxtest::bow(w, bias), lx::Target::for_class(1), lx::InferenceMode::kLogits) {}

  lx::AttributionResult result(std::vector<double> scores) const {
    lx::AttributionResult r;
    r.scores = std::move(scores);
    r.units.resize(r.scores.size());
    r.target = scorer.target();
    r.method = "test";
    return r;
  }
};

}  // namespace

TEST(Deletion, PerfectAttributionCurve) {
  Analytic a;
  const auto c = lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}));
  EXPECT_EQ(c.scores, (std::vector<double>{6, 3, 1, 0}));
  ASSERT_EQ(c.fractions.size(), 4u);
  EXPECT_DOUBLE_EQ(c.fractions[1], 1.0 / 3.0);
  EXPECT_NEAR(c.auc, (6.0 / 2 + 3 + 1 + 0.0 / 2) / 3.0, 1e-12);
}

TEST(Deletion, ConstantModelFlat) {
  Analytic a({}, "great good fine", 2.5);
  const auto c = lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({1, 2, 3}));
  for (double s : c.scores) EXPECT_EQ(s, 2.5);
  EXPECT_DOUBLE_EQ(c.auc, 2.5);
}

TEST(Deletion, RandomOrderNoBetterOnAverage) {
  Analytic a;
  const double perfect = lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1})).auc;
  std::vector<double> perm = {1, 2, 3};
  double total = 0.0;
  int count = 0;
  do {
    total += lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result(perm)).auc;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_GE(total / count, perfect);
}

TEST(Deletion, EmptyScores) {
  Analytic a;
  try {
    lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({}));
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kEmptyResult);
  }
}

TEST(Insertion, PerfectAttributionCurve) {
  Analytic a;
  const auto c = lx::insertion(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}));
  EXPECT_EQ(c.scores, (std::vector<double>{0, 3, 5, 6}));
}

TEST(Insertion, PerfectBeatsReversed) {
  Analytic a;
  EXPECT_GE(lx::insertion(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1})).auc,
            lx::insertion(a.scorer, *a.tokenizer, a.tok, a.result({1, 2, 3})).auc);
}

TEST(Insertion, SingleUnitTwoPoints) {
  Analytic a({{"great", 3.0}}, "great", 0.5);
  const auto c = lx::insertion(a.scorer, *a.tokenizer, a.tok, a.result({1.0}));
  EXPECT_EQ(c.scores, (std::vector<double>{0.5, 3.5}));
}

TEST(Aopc, ComprehensivenessPositive) {
  Analytic a;
  EXPECT_GT(lx::aopc(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}), lx::AopcVariant::kComprehensiveness).value,
            0.0);
}

TEST(Aopc, SufficiencyPerfectBeatsReversed) {
  Analytic a;
  const auto perfect = lx::aopc(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}), lx::AopcVariant::kSufficiency);
  const auto reversed = lx::aopc(a.scorer, *a.tokenizer, a.tok, a.result({1, 2, 3}), lx::AopcVariant::kSufficiency);
  EXPECT_LE(perfect.value, reversed.value);
}

TEST(Aopc, ConstantModelZero) {
  Analytic a({}, "great good fine", 1.0);
  for (auto v : {lx::AopcVariant::kComprehensiveness, lx::AopcVariant::kSufficiency})
    EXPECT_EQ(lx::aopc(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}), v).value, 0.0);
}

TEST(Aopc, KGridDeduplicated) {
  Analytic a;
  const auto r = lx::aopc(a.scorer, *a.tokenizer, a.tok, a.result({3, 2, 1}), lx::AopcVariant::kComprehensiveness);
  // ceil(f * 3) for f in 0.1..0.5 gives 1, 1, 1, 2, 2.
  EXPECT_EQ(r.ks, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(r.drops, (std::vector<double>{3.0, 5.0}));
  EXPECT_DOUBLE_EQ(r.value, 4.0);
}

TEST(Metrics, ScaleInvariantInScores) {
  Analytic a;
  const auto x = lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({0.3, 0.2, 0.1}));
  const auto y = lx::deletion(a.scorer, *a.tokenizer, a.tok, a.result({300, 200, 100}));
  EXPECT_EQ(x.scores, y.scores);
}

TEST(Metrics, MismatchedUnits) {
  Analytic a;
  try {
    lx::insertion(a.scorer, *a.tokenizer, a.tok, a.result({1, 2}));
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kDimensionMismatch);
  }
}

TEST(Metrics, RankingTiesToLowerIndex) {
  EXPECT_EQ(lx::ranking({1.0, 2.0, 2.0, 0.5}), (std::vector<std::size_t>{1, 2, 0, 3}));
  EXPECT_DOUBLE_EQ(lx::trapezoid({0, 0.5, 1}, {1, 1, 0}), 0.75);
}
