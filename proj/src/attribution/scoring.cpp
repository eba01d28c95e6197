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

#include "lexplain/attribution/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace lexplain {

namespace {

struct Pick {
  Eigen::Index row;
  Eigen::Index col;
};

Pick locate(const Mat& logits, const Target& target, std::size_t prompt_length) {
  if (target.kind == Target::Kind::kClassIndex) {
    require(target.class_index.has_value(), ErrorCode::kInvalidTarget, "class target without class index");
    require(*target.class_index >= 0 && *target.class_index < logits.cols(), ErrorCode::kInvalidTarget,
            "class index " + std::to_string(*target.class_index) + " out of range [0, " +
                std::to_string(logits.cols()) + ")");
    require(logits.rows() == 1, ErrorCode::kInvalidTarget, "class target on a per-position output");
    return {0, *target.class_index};
  }
  require(target.output_position.has_value() && target.token_id.has_value(), ErrorCode::kInvalidTarget,
          "generation target is not resolved to a position and token");
  const auto row = static_cast<Eigen::Index>(prompt_length) + *target.output_position - 1;
  require(*target.output_position >= 0 && prompt_length > 0 && row < logits.rows(), ErrorCode::kInvalidTarget,
          "output position " + std::to_string(*target.output_position) + " beyond generated length");
  require(*target.token_id >= 0 && *target.token_id < logits.cols(), ErrorCode::kInvalidTarget,
          "target token out of vocabulary");
  return {row, *target.token_id};
}

// Returns log-sum-exp of a row.
double log_sum_exp(const Eigen::Ref<const RowVec>& row) {
  const double m = row.maxCoeff();
  return m + std::log((row.array() - m).exp().sum());
}

}  // namespace

double resolve_score(const Mat& logits, const Target& target, InferenceMode mode, std::size_t prompt_length) {
  const Pick p = locate(logits, target, prompt_length);
  const RowVec row = logits.row(p.row);
  switch (mode) {
    case InferenceMode::kLogits: return row(p.col);
    case InferenceMode::kSoftmax: return std::exp(row(p.col) - log_sum_exp(row));
    case InferenceMode::kLogSoftmax: return row(p.col) - log_sum_exp(row);
  }
  return row(p.col);
}

Mat resolve_score_gradient(const Mat& logits, const Target& target, InferenceMode mode, std::size_t prompt_length) {
  const Pick p = locate(logits, target, prompt_length);
  Mat grad = Mat::Zero(logits.rows(), logits.cols());
  const RowVec row = logits.row(p.row);
  if (mode == InferenceMode::kLogits) {
    grad(p.row, p.col) = 1.0;
    return grad;
  }
  const RowVec probs = (row.array() - log_sum_exp(row)).exp();
  if (mode == InferenceMode::kLogSoftmax) {
    grad.row(p.row) = -probs;
    grad(p.row, p.col) += 1.0;
  } else {
    // d p_t / d z = p_t (e_t - p)
    grad.row(p.row) = -probs(p.col) * probs;
    grad(p.row, p.col) += probs(p.col);
  }
  return grad;
}

TargetScorer::TargetScorer(std::shared_ptr<const ModelAdapter> model, Target target, InferenceMode mode,
                           std::vector<TokenId> generated_prefix, std::size_t batch_size)
    : model_(std::move(model)),
      target_(std::move(target)),
      mode_(mode),
      prefix_(std::move(generated_prefix)),
      batch_size_(std::max<std::size_t>(batch_size, 1)) {
  require(model_ != nullptr, ErrorCode::kInvalidConfig, "null model");
  if (target_.kind == Target::Kind::kGeneratedToken) {
    require(model_->task() == Task::kGeneration, ErrorCode::kInvalidTarget,
            "generated-token target on a classification model");
    require(target_.output_position && static_cast<std::size_t>(*target_.output_position) == prefix_.size(),
            ErrorCode::kInvalidTarget, "teacher-forced prefix length must equal the output position");
    if (!prefix_.empty()) prefix_embeddings_ = model_->embed(prefix_);
  } else {
    require(model_->task() == Task::kClassification, ErrorCode::kInvalidTarget,
            "class target on a generation model");
  }
}

Mat TargetScorer::full_embeddings(const Mat& prompt_embeddings) const {
  if (prefix_.empty()) return prompt_embeddings;
  Mat full(prompt_embeddings.rows() + prefix_embeddings_.rows(), prompt_embeddings.cols());
  full.topRows(prompt_embeddings.rows()) = prompt_embeddings;
  full.bottomRows(prefix_embeddings_.rows()) = prefix_embeddings_;
  return full;
}

double TargetScorer::score(std::span<const TokenId> prompt) const {
  return score_embeddings(model_->embed(prompt));
}

std::vector<double> TargetScorer::score_batch(const std::vector<std::vector<TokenId>>& prompts,
                                              kernels::Execution e) const {
  std::vector<double> out;
  out.reserve(prompts.size());
  for (std::size_t begin = 0; begin < prompts.size(); begin += batch_size_) {
    const std::size_t n = std::min(batch_size_, prompts.size() - begin);
    const auto part = kernels::map_indexed(n, [&](std::size_t i) { return score(prompts[begin + i]); }, e);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

double TargetScorer::score_embeddings(const Mat& prompt_embeddings) const {
  calls_.fetch_add(1);
  const Mat logits = model_->forward(full_embeddings(prompt_embeddings));
  return resolve_score(logits, target_, mode_, static_cast<std::size_t>(prompt_embeddings.rows()));
}

std::pair<double, Mat> TargetScorer::gradient(const Mat& prompt_embeddings) const {
  calls_.fetch_add(1);
  const Mat full = full_embeddings(prompt_embeddings);
  const Mat logits = model_->forward(full);
  const auto s = static_cast<std::size_t>(prompt_embeddings.rows());
  const double value = resolve_score(logits, target_, mode_, s);
  const Mat dfull = model_->backward(full, resolve_score_gradient(logits, target_, mode_, s));
  return {value, dfull.topRows(prompt_embeddings.rows())};
}

}  // namespace lexplain
