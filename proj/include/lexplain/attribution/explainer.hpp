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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lexplain/attribution/gradient.hpp"
#include "lexplain/attribution/perturbation.hpp"
#include "lexplain/model.hpp"

namespace lexplain {

struct ExplainerConfig {
  std::string method = "lime";
  Granularity granularity = Granularity::kWord;
  InferenceMode inference_mode = InferenceMode::kLogits;
  PerturbationConfig perturbation;
  GradConfig gradient;
  std::uint64_t seed = 0;
  /// Generation only: tokens decoded greedily when targets are omitted.
  std::size_t max_new_tokens = 8;
  /// Perturbed inputs evaluated per batch.
  std::size_t batch_size = 32;
};

/// The eleven registered method names.
const std::vector<std::string>& attribution_methods();
bool is_gradient_method(std::string_view method);

/// All attributions computed for one input text.
struct Explanation {
  std::string text;
  TokenizedText tokens;
  /// Generation: the greedily decoded continuation used for targets.
  std::vector<TokenId> generated;
  std::vector<std::string> generated_tokens;
  std::vector<AttributionResult> results;
};

/// Front door for attribution: resolves targets, binds scorers and dispatches
/// to the registered method. Immutable; explain() may be called concurrently.
class AttributionExplainer {
 public:
  /// Throws kUnknownMethod for unregistered method names.
  AttributionExplainer(std::shared_ptr<const ModelAdapter> model, std::shared_ptr<const Tokenizer> tokenizer,
                       ExplainerConfig config);

  const ExplainerConfig& config() const { return config_; }
  const ModelAdapter& model() const { return *model_; }
  const Tokenizer& tokenizer() const { return *tokenizer_; }

  /// Without targets: classification explains the argmax class, generation
  /// explains every greedily generated token (up to max_new_tokens).
  /// Classification targets carry class_index; generation targets carry
  /// output_position and optionally a token_id overriding the greedy token.
  Explanation explain(const std::string& text, const std::optional<std::vector<Target>>& targets = std::nullopt) const;

  /// One result per (input, target) pair, inputs in order.
  std::vector<AttributionResult> explain(const std::vector<std::string>& inputs,
                                         const std::optional<std::vector<std::vector<Target>>>& targets = std::nullopt) const;

  /// Scorer for a resolved target on `tok` (used by metrics and tools).
  TargetScorer make_scorer(const Target& resolved, const std::vector<TokenId>& generated) const;

  /// Runs the configured method for one resolved target.
  AttributionResult attribute(const TokenizedText& tok, const TargetScorer& scorer) const;

 private:
  std::shared_ptr<const ModelAdapter> model_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  ExplainerConfig config_;
};

}  // namespace lexplain
