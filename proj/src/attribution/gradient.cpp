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

#include "lexplain/attribution/gradient.hpp"

#include <cmath>

#include "lexplain/kernels.hpp"

namespace lexplain {

namespace {

Mat zero_special_rows(Mat m, const TokenizedText& tok) {
  for (std::size_t t = 0; t < tok.size(); ++t) {
    if (tok.special_mask[t]) m.row(static_cast<Eigen::Index>(t)).setZero();
  }
  return m;
}

double embedding_std(const Mat& e, const TokenizedText& tok) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < tok.size(); ++t) {
    if (tok.special_mask[t]) continue;
    const auto row = e.row(static_cast<Eigen::Index>(t));
    sum += row.sum();
    sq += row.squaredNorm();
    n += static_cast<std::size_t>(row.size());
  }
  if (n == 0) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
}

Mat gaussian_noise(Rng& rng, const TokenizedText& tok, Eigen::Index cols, double stddev) {
  Mat noise = Mat::Zero(static_cast<Eigen::Index>(tok.size()), cols);
  if (stddev <= 0.0) return noise;
  for (std::size_t t = 0; t < tok.size(); ++t) {
    if (tok.special_mask[t]) continue;
    for (Eigen::Index j = 0; j < cols; ++j) noise(static_cast<Eigen::Index>(t), j) = rng.normal(0.0, stddev);
  }
  return noise;
}

Mat sum_in_order(const std::vector<Mat>& parts, Eigen::Index rows, Eigen::Index cols) {
  Mat acc = Mat::Zero(rows, cols);
  for (const auto& p : parts) acc += p;
  return acc;
}

AttributionResult finish(const AttributionContext& ctx, const GradConfig& cfg, const Mat& map, std::string method) {
  const std::vector<double> token_scores = reduce_rows(zero_special_rows(map, ctx.tok), cfg.effective_reduce());
  const Units units = make_units(ctx.tok, ctx.granularity);
  AttributionResult r =
      make_result(ctx, units, aggregate_to_granularity(token_scores, ctx.tok, ctx.granularity, Reduce::kSum),
                  std::move(method));
  r.diagnostics.notes["reduce"] = std::string(to_string(cfg.effective_reduce()));
  r.diagnostics.notes["input_x_gradient"] = cfg.input_x_gradient ? "true" : "false";
  return r;
}

}  // namespace

std::string_view to_string(Baseline b) { return b == Baseline::kZeroEmbedding ? "zero_embedding" : "pad_embedding"; }

std::string_view to_string(EmbeddingReduce r) {
  switch (r) {
    case EmbeddingReduce::kL2Norm: return "l2_norm";
    case EmbeddingReduce::kSum: return "sum";
    case EmbeddingReduce::kMean: return "mean";
  }
  return "sum";
}

Baseline parse_baseline(std::string_view name) {
  if (name == "zero_embedding") return Baseline::kZeroEmbedding;
  if (name == "pad_embedding") return Baseline::kPadEmbedding;
  fail(ErrorCode::kInvalidConfig, "unknown baseline '" + std::string(name) + "'");
}

EmbeddingReduce parse_embedding_reduce(std::string_view name) {
  for (auto r : {EmbeddingReduce::kL2Norm, EmbeddingReduce::kSum, EmbeddingReduce::kMean}) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorCode::kInvalidConfig, "unknown reduce '" + std::string(name) + "'");
}

void GradConfig::validate() const {
  require(ig_steps >= 2, ErrorCode::kInvalidConfig, "ig_steps must be at least 2");
  require(n_noise >= 1, ErrorCode::kInvalidConfig, "n_noise must be at least 1");
  require(noise_std >= 0.0, ErrorCode::kInvalidConfig, "noise_std must be nonnegative");
}

std::vector<double> reduce_rows(const Mat& map, EmbeddingReduce reduce) {
  std::vector<double> out(static_cast<std::size_t>(map.rows()));
  for (Eigen::Index i = 0; i < map.rows(); ++i) {
    switch (reduce) {
      case EmbeddingReduce::kL2Norm: out[static_cast<std::size_t>(i)] = map.row(i).norm(); break;
      case EmbeddingReduce::kSum: out[static_cast<std::size_t>(i)] = map.row(i).sum(); break;
      case EmbeddingReduce::kMean: out[static_cast<std::size_t>(i)] = map.row(i).mean(); break;
    }
  }
  return out;
}

Mat baseline_embeddings(const AttributionContext& ctx, const GradConfig& cfg) {
  Mat base = ctx.scorer.embed_prompt(ctx.tok.token_ids);
  RowVec fill = RowVec::Zero(base.cols());
  if (cfg.baseline == Baseline::kPadEmbedding) {
    const TokenId pad = ctx.tokenizer.pad_id();
    fill = ctx.scorer.model().embed(std::span<const TokenId>(&pad, 1)).row(0);
  }
  for (std::size_t t = 0; t < ctx.tok.size(); ++t) {
    if (!ctx.tok.special_mask[t]) base.row(static_cast<Eigen::Index>(t)) = fill;
  }
  return base;
}

Mat saliency_map(const AttributionContext& ctx, const GradConfig& cfg) {
  cfg.validate();
  const Mat e = ctx.scorer.embed_prompt(ctx.tok.token_ids);
  Mat g = ctx.scorer.gradient(e).second;
  if (cfg.input_x_gradient) g = g.cwiseProduct(e);
  return zero_special_rows(std::move(g), ctx.tok);
}

Mat integrated_gradients_map(const AttributionContext& ctx, const GradConfig& cfg) {
  cfg.validate();
  const Mat e = ctx.scorer.embed_prompt(ctx.tok.token_ids);
  const Mat e0 = baseline_embeddings(ctx, cfg);
  const Mat delta = e - e0;
  const std::size_t m = cfg.ig_steps;
  // Midpoint rule: alpha_k = (k + 1/2) / m.
  const auto grads = kernels::map_indexed_mat(m, [&](std::size_t k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    return ctx.scorer.gradient(e0 + alpha * delta).second;
  });
  const Mat mean_grad = sum_in_order(grads, e.rows(), e.cols()) / static_cast<double>(m);
  return zero_special_rows(delta.cwiseProduct(mean_grad), ctx.tok);
}

Mat noise_ensemble_map(const AttributionContext& ctx, const GradConfig& cfg, NoiseVariant variant) {
  cfg.validate();
  require(variant != NoiseVariant::kVarGrad || cfg.n_noise >= 2, ErrorCode::kInsufficientSamples,
          "vargrad needs n_noise >= 2");
  const Mat e = ctx.scorer.embed_prompt(ctx.tok.token_ids);
  const double sigma = cfg.noise_std * embedding_std(e, ctx.tok);
  Rng rng(ctx.seed);
  std::vector<Mat> noise;
  noise.reserve(cfg.n_noise);
  for (std::size_t i = 0; i < cfg.n_noise; ++i) noise.push_back(gaussian_noise(rng, ctx.tok, e.cols(), sigma));
  const auto grads =
      kernels::map_indexed_mat(cfg.n_noise, [&](std::size_t i) { return ctx.scorer.gradient(e + noise[i]).second; });

  const double n = static_cast<double>(cfg.n_noise);
  Mat out;
  if (variant == NoiseVariant::kSquareGrad) {
    out = Mat::Zero(e.rows(), e.cols());
    for (const auto& g : grads) out += g.cwiseProduct(g);
    out /= n;
  } else {
    const Mat mean = sum_in_order(grads, e.rows(), e.cols()) / n;
    if (variant == NoiseVariant::kSmoothGrad) {
      out = mean;
    } else {
      out = Mat::Zero(e.rows(), e.cols());
      for (const auto& g : grads) out += (g - mean).cwiseProduct(g - mean);
      out /= (n - 1.0);
    }
  }
  if (cfg.input_x_gradient) out = out.cwiseProduct(e);
  return zero_special_rows(std::move(out), ctx.tok);
}

Mat gradient_shap_map(const AttributionContext& ctx, const GradConfig& cfg) {
  cfg.validate();
  const Mat e = ctx.scorer.embed_prompt(ctx.tok.token_ids);
  const Mat e0 = baseline_embeddings(ctx, cfg);
  const Mat delta = e - e0;
  const double sigma = cfg.noise_std * embedding_std(e, ctx.tok);
  Rng rng(ctx.seed);
  std::vector<Mat> points;
  points.reserve(cfg.n_noise);
  for (std::size_t i = 0; i < cfg.n_noise; ++i) {
    const double u = rng.uniform();
    points.push_back(e0 + u * delta + gaussian_noise(rng, ctx.tok, e.cols(), sigma));
  }
  const auto grads =
      kernels::map_indexed_mat(cfg.n_noise, [&](std::size_t i) { return ctx.scorer.gradient(points[i]).second; });
  const Mat mean_grad = sum_in_order(grads, e.rows(), e.cols()) / static_cast<double>(cfg.n_noise);
  return zero_special_rows(delta.cwiseProduct(mean_grad), ctx.tok);
}

AttributionResult saliency(const AttributionContext& ctx, const GradConfig& cfg) {
  ctx.scorer.reset_calls();
  return finish(ctx, cfg, saliency_map(ctx, cfg), "saliency");
}

AttributionResult input_x_gradient(const AttributionContext& ctx, GradConfig cfg) {
  cfg.input_x_gradient = true;
  ctx.scorer.reset_calls();
  return finish(ctx, cfg, saliency_map(ctx, cfg), "input_x_gradient");
}

AttributionResult integrated_gradients(const AttributionContext& ctx, const GradConfig& cfg) {
  ctx.scorer.reset_calls();
  // Path methods always multiply by (e - e0); input_x_gradient does not apply.
  GradConfig effective = cfg;
  effective.input_x_gradient = true;
  AttributionResult r = finish(ctx, effective, integrated_gradients_map(ctx, cfg), "integrated_gradients");
  r.diagnostics.notes["ig_steps"] = std::to_string(cfg.ig_steps);
  r.diagnostics.notes["baseline"] = std::string(to_string(cfg.baseline));
  return r;
}

AttributionResult noise_ensemble(const AttributionContext& ctx, const GradConfig& cfg, NoiseVariant variant) {
  ctx.scorer.reset_calls();
  const char* name = variant == NoiseVariant::kSmoothGrad   ? "smoothgrad"
                     : variant == NoiseVariant::kSquareGrad ? "squaregrad"
                                                            : "vargrad";
  return finish(ctx, cfg, noise_ensemble_map(ctx, cfg, variant), name);
}

AttributionResult gradient_shap(const AttributionContext& ctx, const GradConfig& cfg) {
  ctx.scorer.reset_calls();
  GradConfig effective = cfg;
  effective.input_x_gradient = true;
  AttributionResult r = finish(ctx, effective, gradient_shap_map(ctx, cfg), "gradient_shap");
  r.diagnostics.notes["baseline"] = std::string(to_string(cfg.baseline));
  return r;
}

}  // namespace lexplain
