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
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lexplain/attribution/scoring.hpp"
#include "lexplain/attribution/types.hpp"
#include "lexplain/random.hpp"
#include "lexplain/tokenizer.hpp"

namespace lexplain {

using MaskRows = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class DesignKind { kOcclusion, kLimeUniform, kKernelShap, kSobolReplicated, kEnumeration, kCustom };

std::string_view to_string(DesignKind kind);

/// p binary designs over M interpretable units; 1 keeps a unit, 0 perturbs it.
struct MaskMatrix {
  MaskRows masks;
  DesignKind kind = DesignKind::kCustom;

  std::size_t rows() const { return static_cast<std::size_t>(masks.rows()); }
  std::size_t units() const { return static_cast<std::size_t>(masks.cols()); }
  std::size_t kept(std::size_t row) const;
};

/// Row 0 all ones; row i+1 drops unit i.
MaskMatrix occlusion_design(std::size_t m);
/// All 2^m coalitions; row r encodes bit j of r as unit j.
MaskMatrix enumeration_design(std::size_t m);

enum class Replacement { kMaskToken, kPadToken, kDelete };

std::string_view to_string(Replacement r);
Replacement parse_replacement(std::string_view name);

struct PerturbationConfig {
  Replacement replacement = Replacement::kMaskToken;
  std::size_t n_samples = 1000;
  double kernel_width = 0.75;
  std::size_t sobol_n = 128;
  double ridge = 1e-6;
  /// KernelSHAP enumerates every coalition when 2^M is at most this.
  std::size_t max_enumeration = 4096;

  void validate() const;
};

/// Perturbed prompts, one per design row. Tokens of every unit whose mask is
/// 0 are replaced (or deleted); special tokens are never touched. A requested
/// mask token that the tokenizer lacks falls back to the pad token and
/// records a warning.
std::vector<std::vector<TokenId>> apply_masks(const TokenizedText& tok, const Tokenizer& tokenizer,
                                              const MaskMatrix& masks, const Units& units,
                                              const PerturbationConfig& cfg,
                                              std::vector<std::string>* warnings = nullptr);

/// Value of every coalition in a design, in row order.
using CoalitionValue = std::function<std::vector<double>(const MaskMatrix&)>;

struct Estimate {
  std::vector<double> scores;
  std::size_t evaluations = 0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> notes;
};

// Estimators over an abstract coalition game with `m` players. The
// model-backed operations below wrap them with apply_masks + TargetScorer.

Estimate estimate_lime(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng);
Estimate estimate_kernelshap(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng);
Estimate estimate_sobol(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng);

/// Shapley kernel weight (M-1) / (C(M,k) k (M-k)) for a coalition of size k, 0 < k < M.
double shapley_kernel_weight(std::size_t m, std::size_t k);

/// Everything a model-backed attribution needs about one (input, target) pair.
struct AttributionContext {
  const TargetScorer& scorer;
  const Tokenizer& tokenizer;
  const TokenizedText& tok;
  Granularity granularity = Granularity::kWord;
  std::uint64_t seed = 0;
};

AttributionResult occlusion(const AttributionContext& ctx, const PerturbationConfig& cfg);
AttributionResult lime(const AttributionContext& ctx, const PerturbationConfig& cfg);
AttributionResult kernelshap(const AttributionContext& ctx, const PerturbationConfig& cfg);
AttributionResult sobol(const AttributionContext& ctx, const PerturbationConfig& cfg);

/// Adapts a model-backed context into a coalition game over its units.
CoalitionValue model_coalition_value(const AttributionContext& ctx, const Units& units,
                                     const PerturbationConfig& cfg, std::vector<std::string>* warnings);

/// Fills units, granularity, target, method, mode and call count.
AttributionResult make_result(const AttributionContext& ctx, const Units& units, std::vector<double> scores,
                              std::string method);

}  // namespace lexplain
