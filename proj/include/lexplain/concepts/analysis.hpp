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

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lexplain/activations.hpp"
#include "lexplain/attribution/types.hpp"
#include "lexplain/concepts/concept_model.hpp"
#include "lexplain/model.hpp"

namespace lexplain {

enum class InterpretationMethod { kMaxActWords, kTopVocab, kLlmLabel };
std::string_view to_string(InterpretationMethod m);

struct ConceptInterpretation {
  std::size_t concept_id = 0;
  InterpretationMethod method = InterpretationMethod::kMaxActWords;
  /// Sorted by value, descending.
  std::vector<std::pair<std::string, double>> evidence;
  std::optional<std::string> label;
  std::vector<std::string> warnings;
};

/// For every concept, the k corpus words with the highest encoded activation.
/// A word appears once, at its best activation; ties go to the earlier
/// (sample, unit). Fewer than k distinct words truncates with a warning.
/// `corpus` must be the tokenized texts the bundle was collected from.
std::vector<ConceptInterpretation> maxact_words(const ConceptModel& model, const ActivationBundle& bundle,
                                                const std::vector<TokenizedText>& corpus,
                                                const Tokenizer& tokenizer, std::size_t k);

/// Vocabulary tokens with the highest logits when the unit-norm concept
/// direction is fed through the predictor. Generation models only
/// (kUnsupportedTask otherwise). Ties go to the lower token id.
ConceptInterpretation top_vocab(const SplitModel& split, const ConceptModel& model, const Tokenizer& tokenizer,
                                std::size_t concept_id, std::size_t k);

// ---------------------------------------------------------------------------
// Labeling.

/// Raised when the labeling backend cannot answer; carries the interpretation
/// without a label.
class LabelingUnavailable : public Error {
 public:
  LabelingUnavailable(const std::string& message, ConceptInterpretation unlabeled)
      : Error(ErrorCode::kLabelingUnavailable, message), interpretation_(std::move(unlabeled)) {}
  const ConceptInterpretation& interpretation() const noexcept { return interpretation_; }

 private:
  ConceptInterpretation interpretation_;
};

class LabelingClient {
 public:
  virtual ~LabelingClient() = default;
  /// Returns a label for `prompt`; `evidence` is the ranked evidence the
  /// prompt was built from. Throws on failure.
  virtual std::string complete(const std::string& prompt, const std::vector<std::string>& evidence) const = 0;
};

/// Deterministic in-process client: the top three evidence strings joined by " / ".
class StubLabelingClient final : public LabelingClient {
 public:
  std::string complete(const std::string& prompt, const std::vector<std::string>& evidence) const override;
};

/// POSTs {"prompt": ...} as JSON to `url` and reads {"label": ...}. Requests
/// are serialized; each one is bounded by `timeout`.
class HttpLabelingClient final : public LabelingClient {
 public:
  explicit HttpLabelingClient(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  std::string complete(const std::string& prompt, const std::vector<std::string>& evidence) const override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
};

std::string labeling_prompt(const ConceptInterpretation& interp);

/// Fills the label from `client`. Empty evidence yields "" with a warning and
/// no request. Client failures raise LabelingUnavailable.
ConceptInterpretation llm_label(const ConceptInterpretation& interp, const LabelingClient& client);

// ---------------------------------------------------------------------------
// Importance.

enum class ImportanceEstimator { kGrad, kConceptXGrad };
std::string_view to_string(ImportanceEstimator e);
ImportanceEstimator parse_importance_estimator(std::string_view name);

struct ConceptImportance {
  std::size_t concept_id = 0;
  double value = 0.0;
  ImportanceEstimator estimator = ImportanceEstimator::kGrad;
  Target target;
};

/// Concept codes of a token sequence and the score obtained by decoding them
/// and running the predictor: score(predict(decode(codes))).
struct ConceptForward {
  Mat codes;  // s x c
  double score = 0.0;
  /// Activation row whose codes are reported (the [CLS] row, or the row that
  /// predicts the target token).
  Eigen::Index row = 0;
};

/// `ids` is the full sequence fed to the model (prompt followed by any
/// teacher-forced generated tokens); `prompt_length` locates generation targets.
ConceptForward concept_forward(const SplitModel& split, const ConceptModel& model, std::span<const TokenId> ids,
                               const Target& target, InferenceMode mode, std::size_t prompt_length);
/// Score of explicit codes.
double concept_score(const SplitModel& split, const ConceptModel& model, const Mat& codes, const Target& target,
                     InferenceMode mode, std::size_t prompt_length);
/// d score / d codes (s x c).
Mat concept_gradient(const SplitModel& split, const ConceptModel& model, const Mat& codes, const Target& target,
                     InferenceMode mode, std::size_t prompt_length);

/// Importance of every concept for `target` on `text`. Without a target:
/// the argmax class, or the first greedily generated token.
std::vector<ConceptImportance> concept_importance(const SplitModel& split, const ConceptModel& model,
                                                  const Tokenizer& tokenizer, const std::string& text,
                                                  const std::optional<Target>& target, ImportanceEstimator estimator,
                                                  InferenceMode mode = InferenceMode::kLogits);

// ---------------------------------------------------------------------------
// Metrics.

double reconstruction_mse(const ConceptModel& model, const Mat& activations);
/// Frechet distance between Gaussian fits of the rows of x and y.
double frechet_distance(const Mat& x, const Mat& y, std::vector<std::string>* warnings = nullptr);
/// Fraction of encoded entries with magnitude above 1e-8.
double sparsity(const ConceptModel& model, const Mat& activations);
/// Mean matched cosine between dictionary rows under the best one-to-one
/// assignment. Absolute cosine when either kind is sign-ambiguous.
double stability(const ConceptModel& a, const ConceptModel& b);
/// Maximum-weight one-to-one assignment for an r x c weight matrix with
/// r <= c; returns the column chosen for each row.
std::vector<std::size_t> max_weight_matching(const Mat& weights);

struct ConceptMetrics {
  std::map<std::string, double> values;
  std::vector<std::string> warnings;
};

/// Names: "mse", "fid", "sparsity", "stability". Stability without `other`
/// throws kMissingCounterpart.
ConceptMetrics concept_metrics(const ConceptModel& model, const ActivationBundle& bundle,
                               const ConceptModel* other = nullptr,
                               const std::vector<std::string>& names = {"mse", "fid", "sparsity"});

// ---------------------------------------------------------------------------
// Synthetic data.

/// Documents over the built-in vocabulary, each drawn from one of three topics
/// (sports, business, science) mixed with filler words. The topic words are
/// the planted concepts of the reference bag-of-words model.
std::vector<std::string> synthetic_corpus(std::size_t n_docs, std::uint64_t seed);

}  // namespace lexplain
