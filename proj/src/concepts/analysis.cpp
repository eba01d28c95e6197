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

#include "lexplain/concepts/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "lexplain/attribution/scoring.hpp"
#include "lexplain/random.hpp"

namespace lexplain {

std::string_view to_string(InterpretationMethod m) {
  switch (m) {
    case InterpretationMethod::kMaxActWords: return "maxact_words";
    case InterpretationMethod::kTopVocab: return "top_vocab";
    case InterpretationMethod::kLlmLabel: return "llm_label";
  }
  return "unknown";
}

std::string_view to_string(ImportanceEstimator e) {
  return e == ImportanceEstimator::kGrad ? "grad" : "concept_x_grad";
}

ImportanceEstimator parse_importance_estimator(std::string_view name) {
  if (name == "grad") return ImportanceEstimator::kGrad;
  if (name == "concept_x_grad") return ImportanceEstimator::kConceptXGrad;
  fail(ErrorCode::kInvalidConfig, "unknown importance estimator '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

std::vector<ConceptInterpretation> maxact_words(const ConceptModel& model, const ActivationBundle& bundle,
                                                const std::vector<TokenizedText>& corpus,
                                                const Tokenizer& tokenizer, std::size_t k) {
  require(bundle.provenance.size() == bundle.rows(), ErrorCode::kInvalidInput,
          "activation bundle provenance does not cover its rows");
  std::vector<std::string> words(bundle.rows());
  for (std::size_t r = 0; r < bundle.rows(); ++r) {
    const RowOrigin& o = bundle.provenance[r];
    require(o.sample < corpus.size(), ErrorCode::kInvalidInput,
            "activation row " + std::to_string(r) + " refers to sample " + std::to_string(o.sample) +
                " outside the corpus");
    words[r] = unit_text(corpus[o.sample], tokenizer, bundle.granularity, o.unit);
  }
  const Mat codes = model.encode(to_double(bundle.matrix));

  std::vector<std::size_t> rows(bundle.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const auto earlier = [&](std::size_t a, std::size_t b) {
    const RowOrigin& x = bundle.provenance[a];
    const RowOrigin& y = bundle.provenance[b];
    return x.sample != y.sample ? x.sample < y.sample : x.unit < y.unit;
  };

  std::vector<ConceptInterpretation> out(model.concepts());
  for (std::size_t j = 0; j < model.concepts(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    std::vector<std::size_t> order = rows;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double va = codes(static_cast<Eigen::Index>(a), col), vb = codes(static_cast<Eigen::Index>(b), col);
      return va != vb ? va > vb : earlier(a, b);
    });
    ConceptInterpretation& interp = out[j];
    interp.concept_id = j;
    interp.method = InterpretationMethod::kMaxActWords;
    std::set<std::string> seen;
    for (std::size_t r : order) {
      if (interp.evidence.size() == k) break;
      if (!seen.insert(words[r]).second) continue;
      interp.evidence.emplace_back(words[r], codes(static_cast<Eigen::Index>(r), col));
    }
    if (interp.evidence.size() < k)
      interp.warnings.push_back("only " + std::to_string(interp.evidence.size()) + " distinct words available for k = " +
                                std::to_string(k));
  }
  return out;
}

ConceptInterpretation top_vocab(const SplitModel& split, const ConceptModel& model, const Tokenizer& tokenizer,
                                std::size_t concept_id, std::size_t k) {
  require(split.adapter().task() == Task::kGeneration, ErrorCode::kUnsupportedTask,
          "top_vocab needs a generation model with an unembedding");
  require(concept_id < model.concepts(), ErrorCode::kInvalidConfig,
          "concept " + std::to_string(concept_id) + " out of range");
  ConceptInterpretation interp;
  interp.concept_id = concept_id;
  interp.method = InterpretationMethod::kTopVocab;

  Mat unit = Mat::Zero(1, static_cast<Eigen::Index>(model.concepts()));
  unit(0, static_cast<Eigen::Index>(concept_id)) = 1.0;
  Mat direction = model.decode(unit) - model.decode(Mat::Zero(1, unit.cols()));
  const double norm = direction.norm();
  if (norm > 0.0) {
    direction /= norm;
  } else {
    interp.warnings.push_back("concept " + std::to_string(concept_id) + " has a zero direction");
  }
  const Mat logits = split.predict(direction);
  const RowVec row = logits.row(logits.rows() - 1);

  std::vector<Eigen::Index> ids(static_cast<std::size_t>(row.size()));
  std::iota(ids.begin(), ids.end(), 0);
  const std::size_t keep = std::min<std::size_t>(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return row(a) > row(b) || (row(a) == row(b) && a < b); });
  for (std::size_t i = 0; i < keep; ++i)
    interp.evidence.emplace_back(tokenizer.token(static_cast<TokenId>(ids[i])), row(ids[i]));
  if (keep < k) interp.warnings.push_back("k exceeds the vocabulary size");
  return interp;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::Index report_row(const Target& target, std::size_t prompt_length) {
  if (target.kind == Target::Kind::kClassIndex) return 0;
  return static_cast<Eigen::Index>(prompt_length) + *target.output_position - 1;
}

}  // namespace

double concept_score(const SplitModel& split, const ConceptModel& model, const Mat& codes, const Target& target,
                     InferenceMode mode, std::size_t prompt_length) {
  return resolve_score(split.predict(model.decode(codes)), target, mode, prompt_length);
}

Mat concept_gradient(const SplitModel& split, const ConceptModel& model, const Mat& codes, const Target& target,
                     InferenceMode mode, std::size_t prompt_length) {
  const Mat reconstructed = model.decode(codes);
  const Mat logits = split.predict(reconstructed);
  const Mat dlogits = resolve_score_gradient(logits, target, mode, prompt_length);
  return model.decode_backward(split.predict_backward(reconstructed, dlogits));
}

ConceptForward concept_forward(const SplitModel& split, const ConceptModel& model, std::span<const TokenId> ids,
                               const Target& target, InferenceMode mode, std::size_t prompt_length) {
  ConceptForward f;
  f.codes = model.encode(split.extract(ids));
  f.score = concept_score(split, model, f.codes, target, mode, prompt_length);
  f.row = report_row(target, prompt_length);
  return f;
}

std::vector<ConceptImportance> concept_importance(const SplitModel& split, const ConceptModel& model,
                                                  const Tokenizer& tokenizer, const std::string& text,
                                                  const std::optional<Target>& target_in,
                                                  ImportanceEstimator estimator, InferenceMode mode) {
  const ModelAdapter& adapter = split.adapter();
  const TokenizedText tok = tokenizer.encode(text);
  std::vector<TokenId> ids = tok.token_ids;
  Target target;
  if (adapter.task() == Task::kClassification) {
    if (target_in) {
      target = *target_in;
    } else {
      Eigen::Index best = 0;
      adapter.forward_ids(ids).row(0).maxCoeff(&best);
      target = Target::for_class(static_cast<int>(best));
    }
    require(target.kind == Target::Kind::kClassIndex, ErrorCode::kInvalidTarget,
            "classification importance needs a class target");
  } else {
    target = target_in.value_or(Target::for_position(0));
    require(target.kind == Target::Kind::kGeneratedToken && target.output_position && *target.output_position >= 0,
            ErrorCode::kInvalidTarget, "generation importance needs an output position");
    const auto p = static_cast<std::size_t>(*target.output_position);
    const auto generated = greedy_generate(adapter, tokenizer, ids, p + 1);
    require(generated.size() > p, ErrorCode::kInvalidTarget, "output position beyond generated length");
    if (!target.token_id) target.token_id = generated[p];
    target.token = tokenizer.display(*target.token_id);
    ids.insert(ids.end(), generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(p));
  }

  const ConceptForward f = concept_forward(split, model, ids, target, mode, tok.size());
  const Mat grad = concept_gradient(split, model, f.codes, target, mode, tok.size());
  std::vector<ConceptImportance> out(model.concepts());
  for (std::size_t j = 0; j < model.concepts(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const double g = grad(f.row, col);
    out[j].concept_id = j;
    out[j].estimator = estimator;
    out[j].target = target;
    out[j].value = estimator == ImportanceEstimator::kGrad ? g : f.codes(f.row, col) * g;
    require(std::isfinite(out[j].value), ErrorCode::kInvalidActivations, "non-finite concept importance");
  }
  return out;
}

// ---------------------------------------------------------------------------

double reconstruction_mse(const ConceptModel& model, const Mat& activations) {
  const Mat r = model.reconstruct(activations);
  return (r - activations).squaredNorm() / static_cast<double>(activations.size());
}

double frechet_distance(const Mat& x, const Mat& y, std::vector<std::string>* warnings) {
  require(x.cols() == y.cols(), ErrorCode::kDimensionMismatch, "sample sets differ in width");
  require(x.rows() >= 2 && y.rows() >= 2, ErrorCode::kInsufficientData, "FID needs at least two rows per set");
  const RowVec mu1 = x.colwise().mean();
  const RowVec mu2 = y.colwise().mean();
  const Mat xc = x.rowwise() - mu1;
  const Mat yc = y.rowwise() - mu2;
  const Mat s1 = xc.transpose() * xc / static_cast<double>(x.rows() - 1);
  const Mat s2 = yc.transpose() * yc / static_cast<double>(y.rows() - 1);

  // Tr((S1 S2)^{1/2}) = Tr((S1^{1/2} S2 S1^{1/2})^{1/2}), the inner product symmetric PSD.
  Eigen::SelfAdjointEigenSolver<Mat> e1(s1);
  const Vec root1 = e1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat s1_half = e1.eigenvectors() * root1.asDiagonal() * e1.eigenvectors().transpose();
  Mat inner = s1_half * s2 * s1_half;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> e2(inner, Eigen::EigenvaluesOnly);
  const Vec lambda = e2.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (warnings && (lambda.array() < -1e-10 * scale).any())
    warnings->push_back("covariance product not PSD; negative eigenvalues clipped to 0");
  const double tr_sqrt = lambda.cwiseMax(0.0).cwiseSqrt().sum();
  const double fid = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  return std::max(fid, 0.0);
}

double sparsity(const ConceptModel& model, const Mat& activations) {
  const Mat codes = model.encode(activations);
  return static_cast<double>((codes.array().abs() > 1e-8).count()) / static_cast<double>(codes.size());
}

std::vector<std::size_t> max_weight_matching(const Mat& w) {
  const auto n = static_cast<std::size_t>(w.rows());
  const auto m = static_cast<std::size_t>(w.cols());
  require(n <= m, ErrorCode::kDimensionMismatch, "matching needs rows <= cols");
  if (n == 0) return {};
  // Hungarian algorithm with potentials on cost = -w (1-based arrays).
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -w(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double stability(const ConceptModel& a, const ConceptModel& b) {
  require(a.width() == b.width(), ErrorCode::kDimensionMismatch, "dictionaries differ in width");
  Mat da = a.dictionary();
  Mat db = b.dictionary();
  const auto normalize = [](Mat& d) {
    for (Eigen::Index r = 0; r < d.rows(); ++r) {
      const double n = d.row(r).norm();
      if (n > 0.0) d.row(r) /= n;
    }
  };
  normalize(da);
  normalize(db);
  if (da.rows() > db.rows()) std::swap(da, db);
  Mat cosine = da * db.transpose();
  if (is_sign_ambiguous(a.kind()) || is_sign_ambiguous(b.kind())) cosine = cosine.cwiseAbs();
  const auto match = max_weight_matching(cosine);
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i)
    total += cosine(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(match[i]));
  return total / static_cast<double>(match.size());
}

ConceptMetrics concept_metrics(const ConceptModel& model, const ActivationBundle& bundle, const ConceptModel* other,
                               const std::vector<std::string>& names) {
  ConceptMetrics out;
  const Mat a = to_double(bundle.matrix);
  for (const auto& name : names) {
    if (name == "mse") {
      out.values["mse"] = reconstruction_mse(model, a);
    } else if (name == "fid") {
      out.values["fid"] = frechet_distance(a, model.reconstruct(a), &out.warnings);
    } else if (name == "sparsity") {
      out.values["sparsity"] = sparsity(model, a);
    } else if (name == "stability") {
      require(other != nullptr, ErrorCode::kMissingCounterpart, "stability needs a second concept model");
      out.values["stability"] = stability(model, *other);
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown concept metric '" + name + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> synthetic_corpus(std::size_t n_docs, std::uint64_t seed) {
  static const std::vector<std::vector<std::string>> kTopics = {
      {"sports", "game", "match", "team", "goal", "player", "season", "coach", "league", "cup"},
      {"business", "market", "stock", "company", "price", "shares", "profit", "bank", "trade", "sales"},
      {"science", "research", "study", "space", "computer", "software", "data", "technology", "scientists"}};
  static const std::vector<std::string> kFiller = {"the", "a",    "this", "was", "in",   "on",    "of",
                                                   "and", "with", "for",  "new", "year", "today", "after",
                                                   "it",  "is",   "very", "big", "first", "week"};
  Rng rng(seed);
  std::vector<std::string> docs;
  docs.reserve(n_docs);
  for (std::size_t i = 0; i < n_docs; ++i) {
    const auto& topic = kTopics[i % kTopics.size()];
    const std::size_t n_topic = 2 + rng.below(3);
    const std::size_t n_filler = 4 + rng.below(5);
    std::vector<std::string> words;
    // The topic name itself appears in every document of that topic.
    words.push_back(topic[0]);
    for (std::size_t t = 1; t < n_topic; ++t) words.push_back(topic[1 + rng.below(topic.size() - 1)]);
    for (std::size_t f = 0; f < n_filler; ++f) words.push_back(kFiller[rng.below(kFiller.size())]);
    for (std::size_t w = words.size(); w > 1; --w) std::swap(words[w - 1], words[rng.below(w)]);
    std::string doc;
    for (const auto& w : words) doc += (doc.empty() ? "" : " ") + w;
    docs.push_back(doc + " .");
  }
  return docs;
}

}  // namespace lexplain
