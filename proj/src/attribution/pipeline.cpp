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

#include "lexplain/attribution/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace lexplain {

MaskMatrix OcclusionPerturbator::masks(std::size_t n_units, Rng&) const { return occlusion_design(n_units); }

MaskMatrix IdentityPerturbator::masks(std::size_t n_units, Rng&) const {
  return {MaskRows::Ones(static_cast<Eigen::Index>(n_units + 1), static_cast<Eigen::Index>(n_units)),
          DesignKind::kOcclusion};
}

std::vector<double> ForwardInference::infer(const TargetScorer& scorer,
                                            const std::vector<std::vector<TokenId>>& inputs) const {
  return scorer.score_batch(inputs, execution_);
}

std::vector<double> DifferenceAggregator::aggregate(const MaskMatrix& masks, std::span<const double> scores) const {
  const std::size_t m = masks.units();
  if (masks.rows() != m + 1) {
    throw PipelineContractError("aggregation", "difference aggregation needs M + 1 designs, got " +
                                                   std::to_string(masks.rows()));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = scores[0] - scores[i + 1];
  return out;
}

std::vector<double> LinearSurrogateAggregator::aggregate(const MaskMatrix& masks,
                                                         std::span<const double> scores) const {
  const auto p = static_cast<Eigen::Index>(masks.rows());
  const auto m = static_cast<Eigen::Index>(masks.units());
  Mat x(p, m + 1);
  Vec y(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    x(r, 0) = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) x(r, j + 1) = masks.masks(r, j);
    y(r) = scores[static_cast<std::size_t>(r)];
  }
  const Vec beta = Eigen::CompleteOrthogonalDecomposition<Mat>(x).solve(y);
  return {beta.data() + 1, beta.data() + beta.size()};
}

AttributionResult run_pipeline(const Perturbator& perturbator, const InferenceStage& inference,
                               const Aggregator& aggregator, const AttributionContext& ctx,
                               const PerturbationConfig& cfg, std::string method) {
  ctx.scorer.reset_calls();
  const Units units = make_units(ctx.tok, ctx.granularity);
  Rng rng(ctx.seed);

  const MaskMatrix masks = perturbator.masks(units.size(), rng);
  if (masks.units() != units.size()) {
    throw PipelineContractError("perturbations", "mask function produced " + std::to_string(masks.units()) +
                                                     " columns for " + std::to_string(units.size()) + " units");
  }
  if (masks.rows() == 0) throw PipelineContractError("perturbations", "mask function produced no designs");
  if ((masks.masks.array() > 1).any()) throw PipelineContractError("perturbations", "mask entries must be 0 or 1");

  std::vector<std::string> warnings;
  const auto inputs = apply_masks(ctx.tok, ctx.tokenizer, masks, units, cfg, &warnings);
  const std::vector<double> outputs = inference.infer(ctx.scorer, inputs);
  if (outputs.size() != inputs.size()) {
    throw PipelineContractError("inference", "returned " + std::to_string(outputs.size()) + " scores for " +
                                                 std::to_string(inputs.size()) + " inputs");
  }

  std::vector<double> scores = aggregator.aggregate(masks, outputs);
  if (scores.size() != units.size()) {
    throw PipelineContractError("aggregation", "returned " + std::to_string(scores.size()) + " scores for " +
                                                   std::to_string(units.size()) + " units");
  }
  if (!std::all_of(scores.begin(), scores.end(), [](double s) { return std::isfinite(s); })) {
    throw PipelineContractError("aggregation", "non-finite attribution score");
  }

  AttributionResult r = make_result(ctx, units, std::move(scores), std::move(method));
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  r.diagnostics.warnings = std::move(warnings);
  r.diagnostics.notes["design"] = std::string(to_string(masks.kind));
  return r;
}

}  // namespace lexplain
