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

// Three-stage attribution pipeline: perturbations -> inference -> aggregation.
// A custom method supplies its own mask function and aggregation rule and
// reuses the library's perturbation and batched inference machinery.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lexplain/attribution/perturbation.hpp"

namespace lexplain {

class Perturbator {
 public:
  virtual ~Perturbator() = default;
  /// Mask function: designs over `n_units` interpretable units.
  virtual MaskMatrix masks(std::size_t n_units, Rng& rng) const = 0;
};

class InferenceStage {
 public:
  virtual ~InferenceStage() = default;
  virtual std::vector<double> infer(const TargetScorer& scorer,
                                    const std::vector<std::vector<TokenId>>& inputs) const = 0;
};

class Aggregator {
 public:
  virtual ~Aggregator() = default;
  virtual std::vector<double> aggregate(const MaskMatrix& masks, std::span<const double> scores) const = 0;
};

/// Occlusion layout: all-ones row followed by one row per dropped unit.
class OcclusionPerturbator final : public Perturbator {
 public:
  MaskMatrix masks(std::size_t n_units, Rng& rng) const override;
};

/// Occlusion-shaped design that never drops anything.
class IdentityPerturbator final : public Perturbator {
 public:
  MaskMatrix masks(std::size_t n_units, Rng& rng) const override;
};

/// Wraps a user mask function.
class FunctionPerturbator final : public Perturbator {
 public:
  using Fn = std::function<MaskMatrix(std::size_t, Rng&)>;
  explicit FunctionPerturbator(Fn fn) : fn_(std::move(fn)) {}
  MaskMatrix masks(std::size_t n_units, Rng& rng) const override { return fn_(n_units, rng); }

 private:
  Fn fn_;
};

/// One forward pass per perturbed input, batched through the kernels layer.
class ForwardInference final : public InferenceStage {
 public:
  explicit ForwardInference(kernels::Execution e = kernels::default_execution()) : execution_(e) {}
  std::vector<double> infer(const TargetScorer& scorer,
                            const std::vector<std::vector<TokenId>>& inputs) const override;

 private:
  kernels::Execution execution_;
};

/// score_i = s(row 0) - s(row i + 1); requires the occlusion layout.
class DifferenceAggregator final : public Aggregator {
 public:
  std::vector<double> aggregate(const MaskMatrix& masks, std::span<const double> scores) const override;
};

/// Ordinary least squares of scores on mask rows (with intercept).
class LinearSurrogateAggregator final : public Aggregator {
 public:
  std::vector<double> aggregate(const MaskMatrix& masks, std::span<const double> scores) const override;
};

/// Validates each stage's contract and throws PipelineContractError naming
/// the offending stage. diagnostics.n_model_calls counts the forward passes.
AttributionResult run_pipeline(const Perturbator& perturbator, const InferenceStage& inference,
                               const Aggregator& aggregator, const AttributionContext& ctx,
                               const PerturbationConfig& cfg, std::string method = "custom");

}  // namespace lexplain
