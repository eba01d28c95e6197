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

#include <string>
#include <vector>

#include "lexplain/attribution/perturbation.hpp"

namespace lexplain {

struct FaithfulnessCurve {
  /// 0, 1/M, ..., 1
  std::vector<double> fractions;
  std::vector<double> scores;
  double auc = 0.0;
};

enum class AopcVariant { kComprehensiveness, kSufficiency };
std::string_view to_string(AopcVariant v);
AopcVariant parse_aopc_variant(std::string_view name);

struct AopcResult {
  /// Distinct unit counts k evaluated, ascending.
  std::vector<std::size_t> ks;
  /// Score drop at each k.
  std::vector<double> drops;
  double value = 0.0;
};

struct MetricConfig {
  /// Only `replacement` is read; reuse the explainer's so "remove" agrees.
  PerturbationConfig perturbation;
  /// Fractions of units for AOPC; k = ceil(f * M) clipped to [1, M].
  std::vector<double> k_fractions = {0.1, 0.2, 0.3, 0.4, 0.5};
};

/// Unit indices by decreasing score, ties by ascending index.
std::vector<std::size_t> ranking(const std::vector<double>& scores);

/// Trapezoid rule over (x, y).
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

// The scorer must be bound to the result's target and inference mode
// (kInvalidTarget otherwise). Results with no units throw kEmptyResult.
FaithfulnessCurve deletion(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                           const AttributionResult& result, const MetricConfig& cfg = {});
FaithfulnessCurve insertion(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                            const AttributionResult& result, const MetricConfig& cfg = {});
AopcResult aopc(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                const AttributionResult& result, AopcVariant variant, const MetricConfig& cfg = {});

}  // namespace lexplain
