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

#include <cstddef>
#include <optional>
#include <vector>

#include "lexplain/attribution/perturbation.hpp"

namespace lexplain {

enum class Baseline { kZeroEmbedding, kPadEmbedding };
enum class EmbeddingReduce { kL2Norm, kSum, kMean };
enum class NoiseVariant { kSmoothGrad, kSquareGrad, kVarGrad };

std::string_view to_string(Baseline b);
std::string_view to_string(EmbeddingReduce r);
Baseline parse_baseline(std::string_view name);
EmbeddingReduce parse_embedding_reduce(std::string_view name);

struct GradConfig {
  std::size_t ig_steps = 64;
  /// Noise standard deviation relative to the standard deviation of the input embeddings.
  double noise_std = 0.1;
  std::size_t n_noise = 32;
  Baseline baseline = Baseline::kPadEmbedding;
  /// Unset: sum when input_x_gradient is on, l2 norm otherwise.
  std::optional<EmbeddingReduce> reduce;
  bool input_x_gradient = true;

  EmbeddingReduce effective_reduce() const {
    return reduce.value_or(input_x_gradient ? EmbeddingReduce::kSum : EmbeddingReduce::kL2Norm);
  }
  void validate() const;
};

// Embedding-space maps (prompt tokens x embedding dim), before reduction.
// Rows of special tokens are zero.

Mat saliency_map(const AttributionContext& ctx, const GradConfig& cfg);
Mat integrated_gradients_map(const AttributionContext& ctx, const GradConfig& cfg);
Mat noise_ensemble_map(const AttributionContext& ctx, const GradConfig& cfg, NoiseVariant variant);
Mat gradient_shap_map(const AttributionContext& ctx, const GradConfig& cfg);

/// Baseline embeddings: special-token rows keep their embedding; other rows
/// become the pad embedding or zero.
Mat baseline_embeddings(const AttributionContext& ctx, const GradConfig& cfg);

/// One score per row.
std::vector<double> reduce_rows(const Mat& map, EmbeddingReduce reduce);

AttributionResult saliency(const AttributionContext& ctx, const GradConfig& cfg);
/// Saliency with input_x_gradient forced on.
AttributionResult input_x_gradient(const AttributionContext& ctx, GradConfig cfg);
AttributionResult integrated_gradients(const AttributionContext& ctx, const GradConfig& cfg);
AttributionResult noise_ensemble(const AttributionContext& ctx, const GradConfig& cfg, NoiseVariant variant);
AttributionResult gradient_shap(const AttributionContext& ctx, const GradConfig& cfg);

}  // namespace lexplain
