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

#include <filesystem>
#include <fstream>
#include <limits>

#include "lexplain/concepts/analysis.hpp"
#include "lexplain/concepts/concept_model.hpp"
#include "lexplain/random.hpp"

namespace lx = lexplain;

namespace {

lx::Mat gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  lx::Rng rng(seed);
  lx::Mat m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Correlated data: Gaussian codes through a random mixing matrix plus an offset.
lx::Mat correlated(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  lx::Mat a = gaussian(n, d, seed) * gaussian(d, d, seed + 1000);
  a.rowwise() += gaussian(1, d, seed + 2000).row(0);
  return a;
}

// S * D with S >= 0 sparse and D >= 0.
lx::Mat planted_nonneg(Eigen::Index n, Eigen::Index c, Eigen::Index d, std::uint64_t seed) {
  lx::Rng rng(seed);
  lx::Mat s = lx::Mat::Zero(n, c), dict(c, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (rng.bernoulli(0.3)) s(i, j) = rng.uniform(0.5, 2.0);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index k = 0; k < d; ++k) dict(j, k) = rng.bernoulli(0.4) ? rng.uniform() : 0.0;
  return s * dict;
}

lx::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const lx::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return lx::ErrorCode::kIo;
}

lx::ConceptConfig sae_cfg(std::size_t c, std::size_t k, std::size_t epochs = 20) {
  lx::ConceptConfig cfg;
  cfg.c = c;
  cfg.sae.k = k;
  cfg.sae.epochs = epochs;
  cfg.sae.lr = 1e-2;
  return cfg;
}

}  // namespace

TEST(ConceptKinds, NamesRoundTrip) {
  for (const auto& name : lx::concept_kinds()) EXPECT_EQ(lx::to_string(lx::parse_concept_kind(name)), name);
  EXPECT_THROW(lx::parse_concept_kind("ica"), lx::Error);
}

TEST(Neurons, Identity) {
  const lx::Mat a = gaussian(10, 4, 1);
  const auto m = lx::fit_concepts(lx::ConceptKind::kNeurons, a, {});
  EXPECT_EQ(m.concepts(), 4u);
  EXPECT_TRUE(m.encode(a) == a);
  EXPECT_TRUE(m.decode(a) == a);
}

TEST(KMeans, OneHotCodes) {
  const lx::Mat a = gaussian(200, 5, 2);
  lx::ConceptConfig cfg;
  cfg.c = 6;
  const auto m = lx::fit_concepts(lx::ConceptKind::kKMeans, a, cfg);
  const lx::Mat codes = m.encode(a);
  for (Eigen::Index i = 0; i < codes.rows(); ++i) {
    EXPECT_EQ(codes.row(i).sum(), 1.0);
    EXPECT_EQ(codes.row(i).maxCoeff(), 1.0);
  }
  const auto& h = m.fit_meta().loss_history;
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1] + 1e-9);
}

TEST(Pca, Orthonormal) {
  lx::ConceptConfig cfg;
  cfg.c = 4;
  const auto m = lx::fit_concepts(lx::ConceptKind::kPca, correlated(300, 8, 3), cfg);
  const lx::Mat g = m.dictionary() * m.dictionary().transpose();
  EXPECT_LT((g - lx::Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Pca, CompleteBasisReconstructs) {
  const lx::Mat a = correlated(100, 6, 4);
  lx::ConceptConfig cfg;
  cfg.c = 6;
  EXPECT_LE(lx::reconstruction_mse(lx::fit_concepts(lx::ConceptKind::kPca, a, cfg), a), 1e-8);
}

TEST(Pca, ErrorIsMeanDiscardedEigenvalue) {
  const lx::Mat a = correlated(500, 8, 5);
  lx::ConceptConfig cfg;
  cfg.c = 3;
  const auto m = lx::fit_concepts(lx::ConceptKind::kPca, a, cfg);
  // Oracle: eigenvalues of the 1/n covariance, computed independently.
  const lx::Mat centered = a.rowwise() - a.colwise().mean();
  const lx::Mat cov = centered.transpose() * centered / static_cast<double>(a.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  const double discarded = ev.head(8 - 3).sum();
  EXPECT_NEAR(lx::reconstruction_mse(m, a), discarded / 8.0, 1e-6);
}

TEST(Pca, ZeroCodeDecodesToMean) {
  const lx::Mat a = correlated(50, 4, 6);
  lx::ConceptConfig cfg;
  cfg.c = 2;
  const auto m = lx::fit_concepts(lx::ConceptKind::kPca, a, cfg);
  const lx::Mat mean = a.colwise().mean();
  EXPECT_LT((m.decode(lx::Mat::Zero(1, 2)) - mean).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Svd, Orthonormal) {
  lx::ConceptConfig cfg;
  cfg.c = 3;
  const auto m = lx::fit_concepts(lx::ConceptKind::kSvd, correlated(100, 6, 7), cfg);
  EXPECT_LT((m.dictionary() * m.dictionary().transpose() - lx::Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Nmf, PlantedFactorsReconstruct) {
  const lx::Mat a = planted_nonneg(1024, 8, 32, 8);
  lx::ConceptConfig cfg;
  cfg.c = 8;
  cfg.max_iters = 2000;
  const auto m = lx::fit_concepts(lx::ConceptKind::kNmf, a, cfg);
  EXPECT_GE(m.dictionary().minCoeff(), 0.0);
  EXPECT_GE(m.encode(a).minCoeff(), 0.0);
  EXPECT_LE(lx::reconstruction_mse(m, a), 1e-2 * a.array().square().mean());
}

TEST(Nmf, NegativeInputsShifted) {
  const lx::Mat a = gaussian(60, 5, 9);
  lx::ConceptConfig cfg;
  cfg.c = 3;
  const auto m = lx::fit_concepts(lx::ConceptKind::kNmf, a, cfg);
  EXPECT_GT(m.shift(), 0.0);
  EXPECT_GE(m.encode(a).minCoeff(), 0.0);
}

TEST(Errors, TooFewRows) {
  lx::ConceptConfig cfg;
  cfg.c = 8;
  EXPECT_EQ(code_of([&] { lx::fit_concepts(lx::ConceptKind::kKMeans, gaussian(4, 3, 1), cfg); }),
            lx::ErrorCode::kInsufficientData);
}

TEST(Errors, NanActivations) {
  lx::Mat a = gaussian(20, 3, 1);
  a(3, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { lx::fit_concepts(lx::ConceptKind::kPca, a, {}); }), lx::ErrorCode::kInvalidActivations);
}

TEST(Errors, WidthMismatch) {
  lx::ConceptConfig cfg;
  cfg.c = 2;
  const auto m = lx::fit_concepts(lx::ConceptKind::kPca, gaussian(20, 4, 1), cfg);
  EXPECT_EQ(code_of([&] { m.encode(gaussian(2, 5, 1)); }), lx::ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { m.decode(gaussian(2, 3, 1)); }), lx::ErrorCode::kDimensionMismatch);
}

TEST(Errors, Divergence) {
  const lx::Mat a = gaussian(64, 4, 1, 1e160);
  EXPECT_EQ(code_of([&] { lx::fit_concepts(lx::ConceptKind::kSaeVanilla, a, sae_cfg(4, 1, 2)); }),
            lx::ErrorCode::kTrainingDiverged);
}

TEST(Sae, TopKSparsityAndSelection) {
  const lx::Mat a = correlated(256, 6, 10);
  const auto m = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, sae_cfg(8, 2, 5));
  const lx::Mat pre = m.pre_activations(a);
  const lx::Mat codes = m.encode(a);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    std::vector<std::pair<double, Eigen::Index>> row;
    for (Eigen::Index j = 0; j < 8; ++j) row.push_back({pre(i, j), j});
    std::stable_sort(row.begin(), row.end(), [](auto x, auto y) { return x.first > y.first; });
    int nnz = 0;
    for (Eigen::Index j = 0; j < 8; ++j) nnz += codes(i, j) != 0.0;
    EXPECT_LE(nnz, 2);
    EXPECT_EQ(codes(i, row[0].second), row[0].first);
    EXPECT_EQ(codes(i, row[1].second), row[1].first);
  }
}

TEST(Sae, BatchTopKInferenceIsPerRow) {
  const lx::Mat a = correlated(256, 6, 11);
  const auto m = lx::fit_concepts(lx::ConceptKind::kSaeBatchTopK, a, sae_cfg(8, 3, 5));
  const lx::Mat codes = m.encode(a);
  for (Eigen::Index i = 0; i < codes.rows(); ++i) EXPECT_LE((codes.row(i).array() != 0.0).count(), 3);
}

TEST(Sae, LargeL1IsSparse) {
  const lx::Mat a = planted_nonneg(512, 8, 16, 12);
  lx::ConceptConfig cfg = sae_cfg(16, 1, 20);
  cfg.sae.l1_coef = 1e3;
  const auto m = lx::fit_concepts(lx::ConceptKind::kSaeVanilla, a, cfg);
  const lx::Mat codes = m.encode(a);
  const double mean_l0 = static_cast<double>((codes.array().abs() > 1e-8).count()) / static_cast<double>(a.rows());
  EXPECT_LE(mean_l0, 0.05 * 16);
}

TEST(Sae, LossTrendsDown) {
  const lx::Mat a = planted_nonneg(512, 8, 16, 13);
  const auto m = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, sae_cfg(16, 4, 30));
  const auto& h = m.fit_meta().loss_history;
  ASSERT_EQ(h.size(), 30u);
  EXPECT_LE(h.back(), h.front());
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], 1.05 * h[i - 1]) << "epoch " << i;
}

TEST(Sae, ReconstructionNoWorseThanTrainingLoss) {
  const lx::Mat a = planted_nonneg(512, 8, 16, 14);
  const auto m = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, sae_cfg(16, 4, 30));
  EXPECT_LE(lx::reconstruction_mse(m, a), 1.05 * m.fit_meta().final_loss);
}

TEST(Sae, FullTopKApproachesPca) {
  // Rank-3 linear data in 8 dimensions; c = d = k, so the autoencoder is affine.
  const lx::Mat a = gaussian(1024, 3, 15) * gaussian(3, 8, 16);
  lx::ConceptConfig cfg = sae_cfg(8, 8, 200);
  const auto sae = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, cfg);
  lx::ConceptConfig pcfg;
  pcfg.c = 8;
  const auto pca = lx::fit_concepts(lx::ConceptKind::kPca, a, pcfg);
  const double var = (a.rowwise() - a.colwise().mean()).array().square().mean();
  EXPECT_LE(lx::reconstruction_mse(sae, a) - lx::reconstruction_mse(pca, a), 0.1 * var);
}

TEST(Sae, DeterministicAndRoundTrips) {
  const lx::Mat a = correlated(128, 6, 17);
  const auto m1 = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, sae_cfg(8, 2, 3));
  const auto m2 = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, sae_cfg(8, 2, 3));
  EXPECT_TRUE(m1.dictionary() == m2.dictionary());
  const auto path = std::filesystem::temp_directory_path() / "lexplain_sae_roundtrip.lxc";
  m1.save(path);
  const auto back = lx::ConceptModel::load(path);
  EXPECT_TRUE(back.dictionary() == m1.dictionary());
  EXPECT_TRUE(back.encode(a) == m1.encode(a));
  EXPECT_EQ(back.kind(), lx::ConceptKind::kSaeTopK);
  EXPECT_EQ(back.k(), 2u);
  std::filesystem::remove(path);
}

TEST(Persistence, EveryKindRoundTrips) {
  const lx::Mat a = planted_nonneg(64, 4, 6, 18);
  for (const auto& name : lx::concept_kinds()) {
    const auto kind = lx::parse_concept_kind(name);
    lx::ConceptConfig cfg = sae_cfg(4, 2, 2);
    cfg.max_iters = 20;
    const auto m = lx::fit_concepts(kind, a, cfg);
    const auto path = std::filesystem::temp_directory_path() / ("lexplain_kind_" + name + ".lxc");
    m.save(path);
    const auto back = lx::ConceptModel::load(path);
    EXPECT_TRUE(back.reconstruct(a) == m.reconstruct(a)) << name;
    std::filesystem::remove(path);
  }
}

TEST(Persistence, BadMagic) {
  const auto path = std::filesystem::temp_directory_path() / "lexplain_bad_magic.lxc";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAMODEL";
  }
  try {
    lx::ConceptModel::load(path);
    FAIL();
  } catch (const lx::Error& e) {
    EXPECT_EQ(e.code(), lx::ErrorCode::kFormat);
    EXPECT_NE(std::string(e.what()).find("unrecognized concept model file"), std::string::npos);
  }
  std::filesystem::remove(path);
}
