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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "lexplain/activations.hpp"
#include "lexplain/attribution/explainer.hpp"
#include "lexplain/attribution/gradient.hpp"
#include "lexplain/attribution/metrics.hpp"
#include "lexplain/attribution/pipeline.hpp"
#include "lexplain/concepts/analysis.hpp"
#include "lexplain/concepts/concept_model.hpp"
#include "lexplain/random.hpp"
#include "support.hpp"

namespace lx = lexplain;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<std::string> sample_words(lx::Rng& rng, std::size_t n) {
  auto pool = lxtest::plain_words();
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
  pool.resize(n);
  return pool;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

lx::Mat gaussian(Eigen::Index n, Eigen::Index d, lx::Rng& rng) {
  lx::Mat m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

// 1. KernelSHAP vs brute-force Shapley on lookup-table games.
Outcome shapley_oracle() {
  const auto t0 = Clock::now();
  lx::Rng rng(101);
  double worst = 0.0;
  for (int game = 0; game < 20; ++game) {
    const std::size_t m = 2 + static_cast<std::size_t>(game % 7);
    std::vector<double> table(std::size_t{1} << m);
    for (auto& v : table) v = rng.normal(0.0, 2.0);
    lx::CoalitionValue value = [&](const lx::MaskMatrix& masks) {
      std::vector<double> out(masks.rows());
      for (std::size_t r = 0; r < masks.rows(); ++r) {
        std::uint32_t s = 0;
        for (std::size_t j = 0; j < m; ++j)
          if (masks.masks(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) s |= 1u << j;
        out[r] = table[s];
      }
      return out;
    };
    lx::Rng est_rng(static_cast<std::uint64_t>(game));
    const auto e = lx::estimate_kernelshap(m, value, {}, est_rng);
    const auto want = lxtest::brute_shapley(m, [&](std::uint32_t s) { return table[s]; });
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(e.scores[j] - want[j]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, "max error " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// 2. Full-enumeration LIME on random linear bag-of-words models.
Outcome lime_exactness() {
  lx::Rng rng(202);
  double worst = 0.0;
  bool enumerated = true;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 2 + rng.below(7);
    const auto words = sample_words(rng, m);
    std::map<std::string, double> weights;
    for (const auto& w : words) weights[w] = rng.normal(0.0, 2.0);
    lx::ExplainerConfig cfg;
    cfg.method = "lime";
    cfg.seed = static_cast<std::uint64_t>(trial);
    lx::AttributionExplainer ex(lxtest::bow(weights, rng.normal()), lxtest::cls_tokenizer(), cfg);
    const auto r = ex.explain(join(words), std::vector<lx::Target>{lx::Target::for_class(1)}).results[0];
    enumerated = enumerated && r.diagnostics.notes.at("design") == "enumeration";
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(r.scores[j] - weights[words[j]]));
  }
  return {worst <= 1e-6 && enumerated, "max error " + fmt(worst) + (enumerated ? "" : ", design was sampled")};
}

// 3. Integrated-gradients completeness on the tiny transformer.
Outcome ig_completeness() {
  lx::Rng rng(303);
  double worst64 = 0.0, worst512 = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const bool gen = trial % 2 == 1;
    const auto model = lx::make_tiny_transformer(gen ? lx::Task::kGeneration : lx::Task::kClassification);
    const auto tokenizer = gen ? lxtest::gen_tokenizer() : lxtest::cls_tokenizer();
    const auto tok = tokenizer->encode(join(sample_words(rng, 3 + rng.below(8))));
    lx::Target target = lx::Target::for_class(static_cast<int>(rng.below(2)));
    if (gen) {
      target = lx::Target::for_position(0);
      target.token_id = static_cast<lx::TokenId>(5 + rng.below(200));
    }
    lx::TargetScorer scorer(model, target, lx::InferenceMode::kLogits);
    const lx::AttributionContext ctx{scorer, *tokenizer, tok, lx::Granularity::kToken, 0};
    for (std::size_t steps : {64u, 512u}) {
      lx::GradConfig cfg;
      cfg.ig_steps = steps;
      const double total = lx::integrated_gradients_map(ctx, cfg).sum();
      const double want = scorer.score_embeddings(scorer.embed_prompt(tok.token_ids)) -
                          scorer.score_embeddings(lx::baseline_embeddings(ctx, cfg));
      (steps == 64 ? worst64 : worst512) = std::max(steps == 64 ? worst64 : worst512, lxtest::rel_err(total, want));
    }
  }
  return {worst64 <= 1e-2 && worst512 <= 1e-3, "rel error m=64 " + fmt(worst64) + ", m=512 " + fmt(worst512)};
}

// 4. Saliency and concept-to-output gradients vs central differences.
Outcome gradient_checks() {
  lx::Rng rng(404);
  const auto model = lx::make_tiny_transformer(lx::Task::kClassification);
  const auto tokenizer = lxtest::cls_tokenizer();
  const auto tok = tokenizer->encode(join(sample_words(rng, 8)));
  lx::TargetScorer scorer(model, lx::Target::for_class(1), lx::InferenceMode::kLogits);
  lx::GradConfig cfg;
  cfg.input_x_gradient = false;
  const lx::Mat g = lx::saliency_map({scorer, *tokenizer, tok}, cfg);
  const lx::Mat e = scorer.embed_prompt(tok.token_ids);
  const double h = 1e-5;
  double worst_sal = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto r = static_cast<Eigen::Index>(1 + rng.below(tok.size() - 2));
    const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(e.cols())));
    lx::Mat ep = e, em = e;
    ep(r, c) += h;
    em(r, c) -= h;
    const double fd = (scorer.score_embeddings(ep) - scorer.score_embeddings(em)) / (2 * h);
    worst_sal = std::max(worst_sal, std::abs(g(r, c) - fd) / std::max(std::abs(fd), 1e-3));
  }

  const auto gen = lx::make_tiny_transformer(lx::Task::kGeneration);
  const auto gtok = lxtest::gen_tokenizer();
  lx::SplitModel split(gen, "layer_1");
  const auto bundle = lx::collect_activations(split, *gtok, lx::synthetic_corpus(40, 4),
                                              lx::ActivationGranularity::kNonSpecialTokens);
  lx::ConceptConfig ccfg;
  ccfg.c = 8;
  ccfg.sae.k = 3;
  ccfg.sae.epochs = 5;
  double worst_concept = 0.0;
  for (auto kind : {lx::ConceptKind::kPca, lx::ConceptKind::kSaeTopK}) {
    const auto cm = lx::fit_concepts(kind, bundle, ccfg);
    const auto ids = gtok->encode("the market price fell after the deal").token_ids;
    auto target = lx::Target::for_position(0);
    target.token_id = 70;
    const auto mode = lx::InferenceMode::kLogits;
    const auto fwd = lx::concept_forward(split, cm, ids, target, mode, ids.size());
    const lx::Mat cg = lx::concept_gradient(split, cm, fwd.codes, target, mode, ids.size());
    for (int i = 0; i < 10; ++i) {
      const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(fwd.codes.rows())));
      const auto c = static_cast<Eigen::Index>(rng.below(8));
      lx::Mat p = fwd.codes, m = fwd.codes;
      p(r, c) += h;
      m(r, c) -= h;
      const double fd = (lx::concept_score(split, cm, p, target, mode, ids.size()) -
                         lx::concept_score(split, cm, m, target, mode, ids.size())) /
                        (2 * h);
      worst_concept = std::max(worst_concept, std::abs(cg(r, c) - fd) / std::max(std::abs(fd), 1e-3));
    }
  }
  return {worst_sal <= 1e-3 && worst_concept <= 1e-3,
          "saliency rel " + fmt(worst_sal) + ", concept rel " + fmt(worst_concept)};
}

// 5. True-weight ordering is optimal for deletion and insertion.
Outcome faithfulness_ordering() {
  lx::Rng rng(505);
  bool ok = true;
  std::size_t checked = 0;
  for (std::size_t m = 2; m <= 6; ++m) {
    const auto words = sample_words(rng, m);
    std::map<std::string, double> weights;
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) weights[words[j]] = w[j] = rng.uniform(0.1, 3.0);
    const auto tokenizer = lxtest::cls_tokenizer();
    const auto tok = tokenizer->encode(join(words));
    lx::TargetScorer scorer(lxtest::bow(weights), lx::Target::for_class(1), lx::InferenceMode::kLogits);
    auto as_result = [&](std::vector<double> scores) {
      lx::AttributionResult r;
      r.scores = std::move(scores);
      r.units = words;
      r.target = scorer.target();
      return r;
    };
    const auto truth = as_result(w);
    const double del = lx::deletion(scorer, *tokenizer, tok, truth).auc;
    const double ins = lx::insertion(scorer, *tokenizer, tok, truth).auc;
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      // Scores that rank unit perm[0] first, perm[1] second, ...
      std::vector<double> s(m);
      for (std::size_t r = 0; r < m; ++r) s[perm[r]] = static_cast<double>(m - r);
      const auto res = as_result(s);
      ok = ok && del <= lx::deletion(scorer, *tokenizer, tok, res).auc + 1e-12;
      ok = ok && ins >= lx::insertion(scorer, *tokenizer, tok, res).auc - 1e-12;
      ++checked;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return {ok, std::to_string(checked) + " orderings checked"};
}

// 6. Concept-model invariants over 100 random bundles.
Outcome concept_invariants() {
  lx::Rng rng(606);
  std::vector<std::string> failures;
  auto check = [&](bool cond, const std::string& what, int trial) {
    if (!cond && failures.size() < 5) failures.push_back(what + " (trial " + std::to_string(trial) + ")");
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = static_cast<Eigen::Index>(4 + rng.below(9));
    const auto n = static_cast<Eigen::Index>(60 + rng.below(100));
    const auto c = static_cast<Eigen::Index>(2 + rng.below(static_cast<std::uint64_t>(d - 2)));
    lx::Mat a = gaussian(n, d, rng) * gaussian(d, d, rng);
    a.rowwise() += gaussian(1, d, rng).row(0);
    lx::ConceptConfig cfg;
    cfg.c = static_cast<std::size_t>(c);
    cfg.seed = static_cast<std::uint64_t>(trial);
    cfg.max_iters = 50;
    cfg.sae.k = 1 + rng.below(static_cast<std::uint64_t>(c));
    cfg.sae.epochs = 2;

    const lx::Mat onehot = lx::fit_concepts(lx::ConceptKind::kKMeans, a, cfg).encode(a);
    bool is_onehot = true;
    for (Eigen::Index i = 0; i < n; ++i)
      is_onehot = is_onehot && onehot.row(i).sum() == 1.0 && onehot.row(i).maxCoeff() == 1.0 &&
                  (onehot.row(i).array() != 0.0).count() == 1;
    check(is_onehot, "kmeans one-hot", trial);

    const auto pca = lx::fit_concepts(lx::ConceptKind::kPca, a, cfg);
    const auto svd = lx::fit_concepts(lx::ConceptKind::kSvd, a, cfg);
    const lx::Mat eye = lx::Mat::Identity(c, c);
    check((pca.dictionary() * pca.dictionary().transpose() - eye).cwiseAbs().maxCoeff() <= 1e-5, "pca orthonormal",
          trial);
    check((svd.dictionary() * svd.dictionary().transpose() - eye).cwiseAbs().maxCoeff() <= 1e-5, "svd orthonormal",
          trial);

    const lx::Mat centered = a.rowwise() - a.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(centered.transpose() * centered / static_cast<double>(n));
    const double discarded = es.eigenvalues().head(d - c).sum() / static_cast<double>(d);
    check(std::abs(lx::reconstruction_mse(pca, a) - discarded) <= 1e-6, "pca error vs discarded eigenvalues", trial);

    const auto nmf = lx::fit_concepts(lx::ConceptKind::kNmf, a, cfg);
    check(nmf.dictionary().minCoeff() >= 0.0 && nmf.encode(a).minCoeff() >= 0.0, "nmf nonnegative", trial);

    const auto topk = lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, cfg);
    const lx::Mat codes = topk.encode(a);
    bool exact = true;
    for (Eigen::Index i = 0; i < n; ++i)
      exact = exact && static_cast<std::size_t>((codes.row(i).array() != 0.0).count()) == cfg.sae.k;
    check(exact, "topk exact sparsity", trial);
  }
  std::string detail = failures.empty() ? "100 trials" : failures.front();
  for (std::size_t i = 1; i < failures.size(); ++i) detail += "; " + failures[i];
  return {failures.empty(), detail};
}

// 7. Concept metric identities.
Outcome metric_identities() {
  lx::Rng rng(707);
  const lx::Mat x = gaussian(5000, 4, rng);
  const double fid_self = std::abs(lx::frechet_distance(x, x));
  lx::Mat y = gaussian(5000, 4, rng);
  const Eigen::RowVector4d mu(1.5, -1.0, 0.5, 2.0);
  y.rowwise() += mu;
  const double fid_rel = lxtest::rel_err(lx::frechet_distance(x, y), mu.squaredNorm());

  const lx::Mat dict = gaussian(8, 16, rng);
  lx::Mat perm(8, 16);
  for (int i = 0; i < 8; ++i) perm.row(i) = dict.row((i * 3 + 5) % 8);
  const double stab = lx::stability(lx::ConceptModel::from_dictionary(lx::ConceptKind::kNmf, dict.cwiseAbs()),
                                    lx::ConceptModel::from_dictionary(lx::ConceptKind::kNmf, perm.cwiseAbs()));

  lx::ConceptConfig cfg;
  cfg.c = 16;
  cfg.sae.k = 3;
  cfg.sae.epochs = 3;
  const lx::Mat a = gaussian(256, 8, rng);
  const double sp = lx::sparsity(lx::fit_concepts(lx::ConceptKind::kSaeTopK, a, cfg), a);

  const bool ok = fid_self <= 1e-6 && fid_rel <= 0.1 && std::abs(stab - 1.0) <= 1e-6 && sp == 3.0 / 16.0;
  return {ok, "fid(X,X) " + fmt(fid_self) + ", shifted rel " + fmt(fid_rel) + ", stability " + fmt(stab) +
                  ", sparsity " + fmt(sp)};
}

// 8. Occlusion through the three-stage pipeline equals the built-in.
Outcome pipeline_equivalence() {
  lx::Rng rng(808);
  const auto model = lx::make_tiny_transformer(lx::Task::kClassification);
  const auto tokenizer = lxtest::cls_tokenizer();
  int equal = 0;
  for (int i = 0; i < 10; ++i) {
    const auto tok = tokenizer->encode(join(sample_words(rng, 2 + rng.below(10))));
    lx::TargetScorer scorer(model, lx::Target::for_class(static_cast<int>(i % 2)), lx::InferenceMode::kSoftmax);
    const lx::AttributionContext ctx{scorer, *tokenizer, tok, lx::Granularity::kWord, static_cast<std::uint64_t>(i)};
    const auto a = lx::run_pipeline(lx::OcclusionPerturbator(), lx::ForwardInference(), lx::DifferenceAggregator(),
                                    ctx, {}, "occlusion");
    const auto b = lx::occlusion(ctx, {});
    equal += a.scores == b.scores;
  }
  return {equal == 10, std::to_string(equal) + "/10 bitwise equal"};
}

// 9. CLI concept pipeline on the tiny transformer: budget and byte stability.
Outcome end_to_end() {
  const auto dir = std::filesystem::temp_directory_path() / "lexplain_acceptance_e2e";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "corpus.txt");
    for (const auto& doc : lx::synthetic_corpus(100, 0)) out << doc << "\n";
  }
  const std::string q = "'";
  const std::string corpus = q + (dir / "corpus.txt").string() + q;
  const std::string model = q + (dir / "sae.lxc").string() + q;
  const std::vector<std::string> steps = {
      "concepts fit --corpus " + corpus + " --model tiny-gen --kind sae_topk --c 32 --k 4 --seed 0 --out " + model,
      "concepts interpret --model-file " + model + " --corpus " + corpus + " --method maxact_words --k 5",
      "concepts interpret --model-file " + model + " --method top_vocab --k 5",
      "concepts interpret --model-file " + model + " --corpus " + corpus + " --method llm_label --k 5",
      "concepts importance --model-file " + model + " --text 'the team won the match' --estimator concept_x_grad",
      "concepts metrics --model-file " + model + " --metric mse --metric fid --metric sparsity"};

  std::vector<std::string> outputs[2];
  double secs[2] = {0.0, 0.0};
  for (int run = 0; run < 2; ++run) {
    const auto t0 = Clock::now();
    for (const auto& s : steps) {
      const auto r = lxtest::run_cli(s);
      if (r.exit_code != 0) return {false, "step failed (exit " + std::to_string(r.exit_code) + "): " + r.err};
      outputs[run].push_back(r.out);
    }
    secs[run] = seconds_since(t0);
    outputs[run].push_back(lxtest::slurp(dir / "sae.lxc"));
  }
  const bool stable = outputs[0] == outputs[1];
  const bool fast = std::max(secs[0], secs[1]) < 60.0;
  std::filesystem::remove_all(dir);
  return {stable && fast, fmt(secs[0]) + " s and " + fmt(secs[1]) + " s, outputs " +
                              (stable ? "byte-identical" : "differ")};
}

// 10. Only "great" carries weight: every method should rank it first.
Outcome great_first() {
  std::vector<std::string> wrong;
  for (const auto& method : lx::attribution_methods()) {
    lx::ExplainerConfig cfg;
    cfg.method = method;
    lx::AttributionExplainer ex(lxtest::bow({{"great", 1.0}}), lxtest::cls_tokenizer(), cfg);
    const auto r = ex.explain("this was a great movie").results[0];
    if (r.units[r.top_unit()] != "great") wrong.push_back(method + " -> " + r.units[r.top_unit()]);
  }
  std::string detail = std::to_string(lx::attribution_methods().size() - wrong.size()) + "/" +
                       std::to_string(lx::attribution_methods().size()) + " methods";
  for (const auto& w : wrong) detail += "; " + w;
  return {wrong.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"Shapley oracle", shapley_oracle},
      {"LIME exactness", lime_exactness},
      {"IG completeness", ig_completeness},
      {"gradient checks", gradient_checks},
      {"faithfulness ordering", faithfulness_ordering},
      {"concept-model invariants", concept_invariants},
      {"metric identities", metric_identities},
      {"pipeline equivalence", pipeline_equivalence},
      {"end-to-end budget", end_to_end},
      {"great ranked first", great_first},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
