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

#include "lexplain/attribution/perturbation.hpp"
#include "lexplain/attribution/pipeline.hpp"
#include "lexplain/random.hpp"
#include "support.hpp"

namespace lx = lexplain;
using lxtest::bow;
using lxtest::cls_tokenizer;

namespace {

struct Fixture {
  std::shared_ptr<const lx::ModelAdapter> model;
  std::shared_ptr<const lx::Tokenizer> tokenizer = cls_tokenizer();
  lx::TokenizedText tok;
  lx::TargetScorer scorer;

  Fixture(const std::map<std::string, double>& w, const std::string& text, double bias = 0.0)
      : model(bow(w, bias)),
        tok(tokenizer->encode(text)),
        scorer(model, lx::Target::for_class(1), lx::InferenceMode::kLogits) {}

  lx::AttributionContext ctx() const { return {scorer, *tokenizer, tok, lx::Granularity::kWord, 0}; }
};

// Additive game over m players with the given weights.
lx::CoalitionValue additive(std::vector<double> w) {
  return [w](const lx::MaskMatrix& masks) {
    std::vector<double> out(masks.rows(), 0.0);
    for (std::size_t r = 0; r < masks.rows(); ++r)
      for (std::size_t j = 0; j < masks.units(); ++j)
        out[r] += masks.masks(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) * w[j];
    return out;
  };
}

}  // namespace

TEST(Masks, AllOnesKeepsInput) {
  Fixture f({}, "great bad movie");
  const auto units = lx::make_units(f.tok, lx::Granularity::kWord);
  lx::MaskMatrix m{lx::MaskRows::Ones(1, 3), lx::DesignKind::kCustom};
  EXPECT_EQ(lx::apply_masks(f.tok, *f.tokenizer, m, units, {})[0], f.tok.token_ids);
}

TEST(Masks, DeleteAllLeavesSpecials) {
  Fixture f({}, "great bad movie");
  const auto units = lx::make_units(f.tok, lx::Granularity::kWord);
  lx::MaskMatrix m{lx::MaskRows::Zero(1, 3), lx::DesignKind::kCustom};
  lx::PerturbationConfig cfg;
  cfg.replacement = lx::Replacement::kDelete;
  const auto out = lx::apply_masks(f.tok, *f.tokenizer, m, units, cfg)[0];
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], *f.tokenizer->cls_id());
  EXPECT_EQ(out[1], *f.tokenizer->sep_id());
}

TEST(Masks, SubwordWordMaskedTogether) {
  const lx::Tokenizer t({"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]", "the", "work", "##shop"}, lx::Framing{});
  const auto tok = t.encode("the workshop");
  const auto units = lx::make_units(tok, lx::Granularity::kWord);
  lx::MaskMatrix m{lx::MaskRows(1, 2), lx::DesignKind::kCustom};
  m.masks << 1, 0;
  const auto out = lx::apply_masks(tok, t, m, units, {})[0];
  ASSERT_EQ(out.size(), tok.size());
  int replaced = 0;
  for (std::size_t i = 0; i < out.size(); ++i) replaced += out[i] != tok.token_ids[i];
  EXPECT_EQ(replaced, 2);
  EXPECT_EQ(out[2], *t.mask_id());
  EXPECT_EQ(out[3], *t.mask_id());
}

TEST(Masks, MissingMaskTokenFallsBackToPad) {
  const lx::Tokenizer t({"[PAD]", "[CLS]", "[SEP]", "[UNK]", "great"}, lx::Framing{});
  const auto tok = t.encode("great");
  const auto units = lx::make_units(tok, lx::Granularity::kWord);
  lx::MaskMatrix m{lx::MaskRows::Zero(1, 1), lx::DesignKind::kCustom};
  std::vector<std::string> warnings;
  const auto out = lx::apply_masks(tok, t, m, units, {}, &warnings)[0];
  EXPECT_EQ(out[1], t.pad_id());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Masks, WidthMismatch) {
  Fixture f({}, "great movie");
  const auto units = lx::make_units(f.tok, lx::Granularity::kWord);
  lx::MaskMatrix m{lx::MaskRows::Ones(1, 3), lx::DesignKind::kCustom};
  try {
    lx::apply_masks(f.tok, *f.tokenizer, m, units, {});
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kDimensionMismatch);
  }
}

TEST(Occlusion, LinearModelScores) {
  Fixture f({{"great", 2.0}}, "great movie");
  lx::PerturbationConfig cfg;
  cfg.replacement = lx::Replacement::kDelete;
  const auto r = lx::occlusion(f.ctx(), cfg);
  ASSERT_EQ(r.scores.size(), 2u);
  EXPECT_EQ(r.scores[0], 2.0);
  EXPECT_EQ(r.scores[1], 0.0);
  EXPECT_EQ(r.units[r.top_unit()], "great");
  EXPECT_EQ(r.diagnostics.n_model_calls, 3u);
}

TEST(Lime, EnumerationRecoversWeights) {
  Fixture f({{"great", 2.0}, {"bad", -1.0}}, "great bad movie", 0.5);
  const auto r = lx::lime(f.ctx(), {});
  ASSERT_EQ(r.scores.size(), 3u);
  EXPECT_NEAR(r.scores[0], 2.0, 1e-6);
  EXPECT_NEAR(r.scores[1], -1.0, 1e-6);
  EXPECT_NEAR(r.scores[2], 0.0, 1e-6);
}

TEST(Lime, ConstantModelGivesZero) {
  Fixture f({}, "great bad movie", 1.0);
  for (double s : lx::lime(f.ctx(), {}).scores) EXPECT_NEAR(s, 0.0, 1e-6);
}

TEST(Lime, DuplicatedDesignSameSolution) {
  const auto design = lx::enumeration_design(3);
  const auto values = additive({2.0, -1.0, 0.0})(design);
  lx::MaskMatrix twice{lx::MaskRows(2 * design.masks.rows(), 3), lx::DesignKind::kCustom};
  twice.masks << design.masks, design.masks;
  std::vector<double> v2 = values;
  v2.insert(v2.end(), values.begin(), values.end());
  lx::LinearSurrogateAggregator agg;
  const auto a = agg.aggregate(design, values);
  const auto b = agg.aggregate(twice, v2);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(a[j], b[j], 1e-9);
    const std::vector<double> want = {2.0, -1.0, 0.0};
    EXPECT_NEAR(b[j], want[j], 1e-6);
  }
}

TEST(Lime, SampledDesignOnLargerInput) {
  Fixture f({{"great", 1.0}}, "this was a great movie and the plot was good and the acting was fine today");
  lx::PerturbationConfig cfg;
  cfg.n_samples = 500;
  const auto r = lx::lime(f.ctx(), cfg);
  EXPECT_EQ(r.units[r.top_unit()], "great");
  EXPECT_EQ(r.diagnostics.notes.at("design"), "lime_uniform");
}

TEST(KernelShap, AdditiveWeightsAndEfficiency) {
  Fixture f({{"great", 2.0}, {"bad", -1.0}}, "great bad movie");
  const auto r = lx::kernelshap(f.ctx(), {});
  EXPECT_NEAR(r.scores[0], 2.0, 1e-6);
  EXPECT_NEAR(r.scores[1], -1.0, 1e-6);
  EXPECT_NEAR(r.scores[2], 0.0, 1e-6);
  const double full = f.scorer.score(f.tok.token_ids);
  const double empty = f.scorer.score(std::vector<lx::TokenId>{*f.tokenizer->cls_id(), *f.tokenizer->sep_id()});
  EXPECT_NEAR(r.scores[0] + r.scores[1] + r.scores[2], full - empty, 1e-9);
}

TEST(KernelShap, PureInteraction) {
  lx::CoalitionValue game = [](const lx::MaskMatrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
      out[r] = m.masks(static_cast<Eigen::Index>(r), 0) * m.masks(static_cast<Eigen::Index>(r), 1);
    return out;
  };
  lx::Rng rng(0);
  const auto e = lx::estimate_kernelshap(2, game, {}, rng);
  EXPECT_NEAR(e.scores[0], 0.5, 1e-9);
  EXPECT_NEAR(e.scores[1], 0.5, 1e-9);
}

TEST(KernelShap, SingleUnitRejected) {
  lx::Rng rng(0);
  try {
    lx::estimate_kernelshap(1, additive({1.0}), {}, rng);
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kTooFewUnits);
  }
}

TEST(KernelShap, ShapleyWeight) {
  // (M-1) / (C(M,k) k (M-k)) for M=4, k=2: 3 / (6*2*2)
  EXPECT_DOUBLE_EQ(lx::shapley_kernel_weight(4, 2), 3.0 / 24.0);
}

TEST(KernelShap, SampledRegimeApproximatesShapley) {
  lx::Rng grng(11);
  const std::size_t m = 10;
  std::vector<double> table(1u << m);
  for (auto& v : table) v = grng.normal();
  lx::CoalitionValue game = [&](const lx::MaskMatrix& masks) {
    std::vector<double> out(masks.rows());
    for (std::size_t r = 0; r < masks.rows(); ++r) {
      std::uint32_t s = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (masks.masks(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) s |= 1u << j;
      out[r] = table[s];
    }
    return out;
  };
  lx::PerturbationConfig cfg;
  cfg.max_enumeration = 64;
  cfg.n_samples = 4000;
  lx::Rng rng(1);
  const auto e = lx::estimate_kernelshap(m, game, cfg, rng);
  const auto want = lxtest::brute_shapley(m, [&](std::uint32_t s) { return table[s]; });
  double sum_e = 0.0, sum_w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    sum_e += e.scores[j];
    sum_w += want[j];
  }
  // Efficiency holds exactly even when sampling.
  EXPECT_NEAR(sum_e, sum_w, 1e-9);
  EXPECT_EQ(e.notes.at("design"), "sampled");
}

TEST(Sobol, AdditiveVarianceRatio) {
  lx::PerturbationConfig cfg;
  cfg.sobol_n = 2048;
  lx::Rng rng(5);
  const auto e = lx::estimate_sobol(3, additive({2.0, -1.0, 0.0}), cfg, rng);
  EXPECT_GT(e.scores[0], e.scores[1]);
  EXPECT_NEAR(e.scores[0] / e.scores[1], 4.0, 0.8);
  EXPECT_NEAR(e.scores[2], 0.0, 1e-12);
}

TEST(Sobol, ConstantModelFlagged) {
  lx::Rng rng(5);
  const auto e = lx::estimate_sobol(3, additive({0.0, 0.0, 0.0}), {}, rng);
  for (double s : e.scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(e.notes.at("zero_variance"), "true");
}

TEST(Sobol, TooFewSamples) {
  lx::PerturbationConfig cfg;
  cfg.sobol_n = 8;
  lx::Rng rng(0);
  try {
    lx::estimate_sobol(2, additive({1.0, 1.0}), cfg, rng);
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kInsufficientSamples);
  }
}

TEST(Sobol, ModelBackedRanking) {
  Fixture f({{"great", 2.0}, {"bad", -1.0}}, "great bad movie");
  const auto r = lx::sobol(f.ctx(), {});
  EXPECT_EQ(r.top_unit(), 0u);
  EXPECT_EQ(r.method, "sobol");
}
