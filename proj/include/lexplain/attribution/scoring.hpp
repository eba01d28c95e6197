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

#include <atomic>
#include <memory>
#include <span>
#include <vector>

#include "lexplain/attribution/types.hpp"
#include "lexplain/kernels.hpp"
#include "lexplain/model.hpp"

namespace lexplain {

/// Scalar score of `target` read from `logits`.
/// Classification: component class_index of the (logits | softmax | log-softmax) row.
/// Generation: the target token's entry in the row that predicts
/// `output_position`, i.e. row prompt_length + output_position - 1.
/// Throws kInvalidTarget for out-of-range classes, positions or tokens.
double resolve_score(const Mat& logits, const Target& target, InferenceMode mode, std::size_t prompt_length = 0);

/// d score / d logits, same shape as `logits`.
Mat resolve_score_gradient(const Mat& logits, const Target& target, InferenceMode mode,
                           std::size_t prompt_length = 0);

/// Binds a model, a resolved target and an inference mode into a scalar
/// function of the prompt. For generation targets the tokens generated before
/// the target position are appended unchanged (teacher forcing); only the
/// prompt is ever perturbed. Counts every forward pass it issues.
class TargetScorer {
 public:
  TargetScorer(std::shared_ptr<const ModelAdapter> model, Target target, InferenceMode mode,
               std::vector<TokenId> generated_prefix = {}, std::size_t batch_size = 32);

  const ModelAdapter& model() const { return *model_; }
  const Target& target() const { return target_; }
  InferenceMode mode() const { return mode_; }
  const std::vector<TokenId>& generated_prefix() const { return prefix_; }

  double score(std::span<const TokenId> prompt) const;
  /// Evaluates `batch_size` prompts at a time; within a batch the forward
  /// passes run concurrently.
  std::vector<double> score_batch(const std::vector<std::vector<TokenId>>& prompts,
                                  kernels::Execution e = kernels::default_execution()) const;

  /// Prompt rows only (s x embedding_dim).
  Mat embed_prompt(std::span<const TokenId> prompt) const { return model_->embed(prompt); }
  double score_embeddings(const Mat& prompt_embeddings) const;
  /// Score and its gradient with respect to the prompt embedding rows.
  std::pair<double, Mat> gradient(const Mat& prompt_embeddings) const;

  std::size_t model_calls() const { return calls_.load(); }
  void reset_calls() const { calls_.store(0); }

 private:
  Mat full_embeddings(const Mat& prompt_embeddings) const;

  std::shared_ptr<const ModelAdapter> model_;
  Target target_;
  InferenceMode mode_;
  std::vector<TokenId> prefix_;
  Mat prefix_embeddings_;
  std::size_t batch_size_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace lexplain
