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

#include "lexplain/attribution/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lexplain {

std::string_view to_string(AopcVariant v) {
  return v == AopcVariant::kComprehensiveness ? "comprehensiveness" : "sufficiency";
}

AopcVariant parse_aopc_variant(std::string_view name) {
  if (name == "comprehensiveness") return AopcVariant::kComprehensiveness;
  if (name == "sufficiency") return AopcVariant::kSufficiency;
  fail(ErrorCode::kInvalidConfig, "unknown AOPC variant '" + std::string(name) + "'");
}

std::vector<std::size_t> ranking(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch, "trapezoid needs equal-length inputs");
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

namespace {

Units checked_units(const TargetScorer& scorer, const TokenizedText& tok, const AttributionResult& result) {
  require(!result.scores.empty(), ErrorCode::kEmptyResult, "attribution result has no units");
  const Target& a = scorer.target();
  const Target& b = result.target;
  require(a.kind == b.kind && a.class_index == b.class_index && a.output_position == b.output_position &&
              a.token_id == b.token_id,
          ErrorCode::kInvalidTarget, "scorer target differs from the result's target");
  require(scorer.mode() == result.inference_mode, ErrorCode::kInvalidTarget,
          "scorer inference mode differs from the result's");
  Units units = make_units(tok, result.granularity);
  require(units.size() == result.scores.size(), ErrorCode::kDimensionMismatch,
          "result has " + std::to_string(result.scores.size()) + " scores for " + std::to_string(units.size()) +
              " units");
  return units;
}

std::vector<double> evaluate(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                             const Units& units, const MaskMatrix& masks, const MetricConfig& cfg) {
  return scorer.score_batch(apply_masks(tok, tokenizer, masks, units, cfg.perturbation));
}

// Row k keeps (keep_top) or drops (!keep_top) the k highest-ranked units.
MaskMatrix prefix_design(const std::vector<std::size_t>& order, const std::vector<std::size_t>& ks, bool keep_top) {
  const auto m = static_cast<Eigen::Index>(order.size());
  MaskMatrix mm{MaskRows::Constant(static_cast<Eigen::Index>(ks.size()), m, keep_top ? 0 : 1), DesignKind::kCustom};
  for (std::size_t r = 0; r < ks.size(); ++r)
    for (std::size_t i = 0; i < ks[r]; ++i)
      mm.masks(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(order[i])) = keep_top ? 1 : 0;
  return mm;
}

FaithfulnessCurve curve(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                        const AttributionResult& result, const MetricConfig& cfg, bool keep_top) {
  const Units units = checked_units(scorer, tok, result);
  const std::size_t m = units.size();
  std::vector<std::size_t> ks(m + 1);
  std::iota(ks.begin(), ks.end(), std::size_t{0});
  FaithfulnessCurve c;
  c.scores = evaluate(scorer, tokenizer, tok, units, prefix_design(ranking(result.scores), ks, keep_top), cfg);
  for (std::size_t k : ks) c.fractions.push_back(static_cast<double>(k) / static_cast<double>(m));
  c.auc = trapezoid(c.fractions, c.scores);
  return c;
}

}  // namespace

FaithfulnessCurve deletion(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                           const AttributionResult& result, const MetricConfig& cfg) {
  return curve(scorer, tokenizer, tok, result, cfg, false);
}

FaithfulnessCurve insertion(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                            const AttributionResult& result, const MetricConfig& cfg) {
  return curve(scorer, tokenizer, tok, result, cfg, true);
}

AopcResult aopc(const TargetScorer& scorer, const Tokenizer& tokenizer, const TokenizedText& tok,
                const AttributionResult& result, AopcVariant variant, const MetricConfig& cfg) {
  const Units units = checked_units(scorer, tok, result);
  require(!cfg.k_fractions.empty(), ErrorCode::kInvalidConfig, "k_fractions must not be empty");
  const std::size_t m = units.size();
  AopcResult out;
  for (double f : cfg.k_fractions) {
    require(f > 0.0 && f <= 1.0, ErrorCode::kInvalidConfig, "k_fractions entries must lie in (0, 1]");
    const auto k = static_cast<std::size_t>(std::ceil(f * static_cast<double>(m) - 1e-12));
    out.ks.push_back(std::clamp<std::size_t>(k, 1, m));
  }
  std::sort(out.ks.begin(), out.ks.end());
  out.ks.erase(std::unique(out.ks.begin(), out.ks.end()), out.ks.end());

  std::vector<std::size_t> ks = out.ks;
  ks.insert(ks.begin(), 0);
  // Row 0 of a drop design is the full input; of a keep design, the empty one.
  const bool keep_top = variant == AopcVariant::kSufficiency;
  auto values = evaluate(scorer, tokenizer, tok, units, prefix_design(ranking(result.scores), ks, keep_top), cfg);
  const double full = keep_top ? scorer.score(tok.token_ids) : values[0];
  for (std::size_t i = 1; i < values.size(); ++i) out.drops.push_back(full - values[i]);
  out.value = std::accumulate(out.drops.begin(), out.drops.end(), 0.0) / static_cast<double>(out.drops.size());
  return out;
}

}  // namespace lexplain
