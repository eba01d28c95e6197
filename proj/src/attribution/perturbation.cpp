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

#include "lexplain/attribution/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lexplain {

namespace {

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

using MaskRow = Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>;

// Uniformly random subset of size k, written into `row` as ones.
void random_subset(Rng& rng, std::size_t m, std::size_t k, MaskRow& row) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(idx[i], idx[j]);
  }
  row.setZero();
  for (std::size_t i = 0; i < k; ++i) row(static_cast<Eigen::Index>(idx[i])) = 1;
}

/// Weighted least squares min ||sqrt(w) (X b - y)||. Exact when X has full
/// column rank; otherwise `ridge` is added to the diagonal of the normal
/// equations (all columns, or all but the intercept column).
Vec weighted_least_squares(const Mat& x, const Vec& y, const Vec& w, double ridge, bool skip_first_column,
                           bool* regularized) {
  const Vec sw = w.array().sqrt();
  const Mat xs = sw.asDiagonal() * x;
  const Vec ys = sw.cwiseProduct(y);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(xs);
  if (cod.rank() == x.cols() || ridge <= 0.0) {
    if (regularized) *regularized = false;
    return cod.solve(ys);
  }
  if (regularized) *regularized = true;
  Mat normal = xs.transpose() * xs;
  for (Eigen::Index j = skip_first_column ? 1 : 0; j < normal.rows(); ++j) normal(j, j) += ridge;
  return Eigen::CompleteOrthogonalDecomposition<Mat>(normal).solve(xs.transpose() * ys);
}

}  // namespace

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::kOcclusion: return "occlusion";
    case DesignKind::kLimeUniform: return "lime_uniform";
    case DesignKind::kKernelShap: return "kernelshap";
    case DesignKind::kSobolReplicated: return "sobol_replicated";
    case DesignKind::kEnumeration: return "enumeration";
    case DesignKind::kCustom: return "custom";
  }
  return "custom";
}

std::string_view to_string(Replacement r) {
  switch (r) {
    case Replacement::kMaskToken: return "mask_token";
    case Replacement::kPadToken: return "pad_token";
    case Replacement::kDelete: return "delete";
  }
  return "mask_token";
}

Replacement parse_replacement(std::string_view name) {
  for (auto r : {Replacement::kMaskToken, Replacement::kPadToken, Replacement::kDelete}) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorCode::kInvalidConfig, "unknown replacement '" + std::string(name) + "'");
}

void PerturbationConfig::validate() const {
  require(n_samples >= 1, ErrorCode::kInvalidConfig, "n_samples must be at least 1");
  require(kernel_width > 0.0, ErrorCode::kInvalidConfig, "kernel_width must be positive");
  require(ridge >= 0.0, ErrorCode::kInvalidConfig, "ridge must be nonnegative");
}

std::size_t MaskMatrix::kept(std::size_t row) const {
  return static_cast<std::size_t>(masks.row(static_cast<Eigen::Index>(row)).cast<int>().sum());
}

MaskMatrix occlusion_design(std::size_t m) {
  MaskMatrix d{MaskRows::Ones(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m)), DesignKind::kOcclusion};
  for (std::size_t i = 0; i < m; ++i) d.masks(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 0;
  return d;
}

MaskMatrix enumeration_design(std::size_t m) {
  require(m < 31, ErrorCode::kInvalidConfig, "cannot enumerate 2^" + std::to_string(m) + " coalitions");
  const std::size_t p = std::size_t{1} << m;
  MaskMatrix d{MaskRows::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m)), DesignKind::kEnumeration};
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      d.masks(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = static_cast<std::uint8_t>((r >> j) & 1U);
    }
  }
  return d;
}

std::vector<std::vector<TokenId>> apply_masks(const TokenizedText& tok, const Tokenizer& tokenizer,
                                              const MaskMatrix& masks, const Units& units,
                                              const PerturbationConfig& cfg, std::vector<std::string>* warnings) {
  require(masks.units() == units.size(), ErrorCode::kDimensionMismatch,
          "mask width " + std::to_string(masks.units()) + " differs from unit count " + std::to_string(units.size()));
  std::optional<TokenId> replacement;
  if (cfg.replacement == Replacement::kMaskToken) {
    replacement = tokenizer.mask_id();
    if (!replacement) {
      replacement = tokenizer.pad_id();
      if (warnings) warnings->push_back("tokenizer has no mask token; replaced with pad token");
    }
  } else if (cfg.replacement == Replacement::kPadToken) {
    replacement = tokenizer.pad_id();
  }

  // token position -> unit
  std::vector<int> unit_of(tok.size(), -1);
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t t : units.tokens[u]) {
      if (!tok.special_mask[t]) unit_of[t] = static_cast<int>(u);
    }
  }

  std::vector<std::vector<TokenId>> out(masks.rows());
  for (std::size_t r = 0; r < masks.rows(); ++r) {
    auto& seq = out[r];
    seq.reserve(tok.size());
    for (std::size_t t = 0; t < tok.size(); ++t) {
      const int u = unit_of[t];
      const bool keep = u < 0 || masks.masks(static_cast<Eigen::Index>(r), u) != 0;
      if (keep) {
        seq.push_back(tok.token_ids[t]);
      } else if (replacement) {
        seq.push_back(*replacement);
      }
    }
  }
  return out;
}

double shapley_kernel_weight(std::size_t m, std::size_t k) {
  require(k > 0 && k < m, ErrorCode::kInvalidInput, "Shapley kernel undefined for empty or full coalitions");
  return static_cast<double>(m - 1) /
         (binomial(m, k) * static_cast<double>(k) * static_cast<double>(m - k));
}

Estimate estimate_lime(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng) {
  cfg.validate();
  require(m >= 1, ErrorCode::kTooFewUnits, "LIME needs at least one unit");
  require(cfg.n_samples >= m + 2, ErrorCode::kInsufficientSamples,
          "LIME needs n_samples >= M + 2 (" + std::to_string(m + 2) + ")");

  MaskMatrix design;
  if (m < 31 && (std::size_t{1} << m) <= cfg.n_samples) {
    design = enumeration_design(m);
  } else {
    design.kind = DesignKind::kLimeUniform;
    design.masks = MaskRows::Zero(static_cast<Eigen::Index>(cfg.n_samples), static_cast<Eigen::Index>(m));
    design.masks.row(0).setOnes();
    for (std::size_t r = 1; r < cfg.n_samples; ++r) {
      const auto k = static_cast<std::size_t>(rng.below(m + 1));
      MaskRow row(static_cast<Eigen::Index>(m));
      random_subset(rng, m, k, row);
      design.masks.row(static_cast<Eigen::Index>(r)) = row;
    }
  }

  const std::vector<double> y = value(design);
  const auto p = static_cast<Eigen::Index>(design.rows());
  Mat x(p, static_cast<Eigen::Index>(m) + 1);
  Vec w(p), yv(p);
  for (Eigen::Index r = 0; r < p; ++r) {
    x(r, 0) = 1.0;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) x(r, j + 1) = design.masks(r, j);
    const double distance = 1.0 - static_cast<double>(design.kept(static_cast<std::size_t>(r))) / static_cast<double>(m);
    w(r) = std::exp(-(distance * distance) / (cfg.kernel_width * cfg.kernel_width));
    yv(r) = y[static_cast<std::size_t>(r)];
  }
  bool regularized = false;
  const Vec beta = weighted_least_squares(x, yv, w, cfg.ridge, true, &regularized);

  Estimate e;
  e.scores.assign(beta.data() + 1, beta.data() + beta.size());
  e.evaluations = design.rows();
  e.notes["design"] = std::string(to_string(design.kind));
  e.notes["intercept"] = std::to_string(beta(0));
  if (regularized) e.notes["ridge"] = "applied";
  return e;
}

Estimate estimate_kernelshap(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng) {
  cfg.validate();
  require(m >= 2, ErrorCode::kTooFewUnits, "KernelSHAP needs at least 2 units, got " + std::to_string(m));

  const bool enumerate = m < 31 && (std::size_t{1} << m) <= cfg.max_enumeration;
  std::vector<double> weights;
  MaskMatrix design;
  design.kind = DesignKind::kKernelShap;
  if (enumerate) {
    const std::size_t total = std::size_t{1} << m;
    design.masks = MaskRows::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(m));
    design.masks.row(0).setOnes();  // full coalition
    // row 1 stays empty
    Eigen::Index r = 2;
    for (std::size_t bits = 1; bits + 1 < total; ++bits) {
      std::size_t k = 0;
      for (std::size_t j = 0; j < m; ++j) {
        const auto bit = static_cast<std::uint8_t>((bits >> j) & 1U);
        design.masks(r, static_cast<Eigen::Index>(j)) = bit;
        k += bit;
      }
      weights.push_back(shapley_kernel_weight(m, k));
      ++r;
    }
  } else {
    // Sizes drawn with probability proportional to the kernel mass of each
    // size, subsets uniform within a size; every sample then has unit weight.
    std::vector<double> size_mass(m, 0.0);
    for (std::size_t k = 1; k < m; ++k) {
      size_mass[k] = static_cast<double>(m - 1) / (static_cast<double>(k) * static_cast<double>(m - k));
    }
    const double total_mass = std::accumulate(size_mass.begin(), size_mass.end(), 0.0);
    const std::size_t n = std::max<std::size_t>(cfg.n_samples, 1);
    design.masks = MaskRows::Zero(static_cast<Eigen::Index>(n + 2), static_cast<Eigen::Index>(m));
    design.masks.row(0).setOnes();
    for (std::size_t s = 0; s < n; ++s) {
      double u = rng.uniform() * total_mass;
      std::size_t k = 1;
      while (k + 1 < m && u >= size_mass[k]) {
        u -= size_mass[k];
        ++k;
      }
      MaskRow row(static_cast<Eigen::Index>(m));
      random_subset(rng, m, k, row);
      design.masks.row(static_cast<Eigen::Index>(s + 2)) = row;
      weights.push_back(1.0);
    }
  }

  const std::vector<double> v = value(design);
  const double v_full = v[0];
  const double v_empty = v[1];
  const double delta = v_full - v_empty;

  // Eliminate the last player through the efficiency constraint:
  //   phi_last = delta - sum_{i<last} phi_i
  //   v(z) - v_empty - z_last * delta = sum_{i<last} (z_i - z_last) phi_i
  const auto rows = static_cast<Eigen::Index>(weights.size());
  const auto free = static_cast<Eigen::Index>(m - 1);
  Mat x(rows, free);
  Vec y(rows), w(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto dr = r + 2;
    const double z_last = design.masks(dr, free);
    for (Eigen::Index j = 0; j < free; ++j) x(r, j) = design.masks(dr, j) - z_last;
    y(r) = v[static_cast<std::size_t>(dr)] - v_empty - z_last * delta;
    w(r) = weights[static_cast<std::size_t>(r)];
  }
  const Vec phi_free = weighted_least_squares(x, y, w, 0.0, false, nullptr);

  Estimate e;
  e.scores.assign(phi_free.data(), phi_free.data() + phi_free.size());
  e.scores.push_back(delta - phi_free.sum());
  e.evaluations = design.rows();
  e.notes["design"] = enumerate ? "enumeration" : "sampled";
  e.notes["base_value"] = std::to_string(v_empty);
  return e;
}

Estimate estimate_sobol(std::size_t m, const CoalitionValue& value, const PerturbationConfig& cfg, Rng& rng) {
  require(m >= 1, ErrorCode::kTooFewUnits, "Sobol needs at least one unit");
  require(cfg.sobol_n >= 32, ErrorCode::kInsufficientSamples, "Sobol needs sobol_n >= 32");
  const auto n = static_cast<Eigen::Index>(cfg.sobol_n);
  const auto mm = static_cast<Eigen::Index>(m);

  MaskRows a(n, mm), b(n, mm);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < mm; ++i) a(j, i) = rng.bernoulli(0.5) ? 1 : 0;
    for (Eigen::Index i = 0; i < mm; ++i) b(j, i) = rng.bernoulli(0.5) ? 1 : 0;
  }
  MaskMatrix design{MaskRows(n * (mm + 2), mm), DesignKind::kSobolReplicated};
  design.masks.topRows(n) = a;
  design.masks.middleRows(n, n) = b;
  for (Eigen::Index i = 0; i < mm; ++i) {
    MaskRows ab = a;
    ab.col(i) = b.col(i);
    design.masks.middleRows((i + 2) * n, n) = ab;
  }

  const std::vector<double> f = value(design);
  double mean = 0.0;
  for (Eigen::Index j = 0; j < 2 * n; ++j) mean += f[static_cast<std::size_t>(j)];
  mean /= static_cast<double>(2 * n);
  double var = 0.0;
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    const double d = f[static_cast<std::size_t>(j)] - mean;
    var += d * d;
  }
  var /= static_cast<double>(2 * n);

  const bool zero_variance = var < 1e-12;
  Estimate e;
  e.scores.resize(m);
  for (Eigen::Index i = 0; i < mm; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = f[static_cast<std::size_t>(j)] - f[static_cast<std::size_t>((i + 2) * n + j)];
      acc += d * d;
    }
    const double half_mean_sq = acc / (2.0 * static_cast<double>(n));
    e.scores[static_cast<std::size_t>(i)] = zero_variance ? half_mean_sq : half_mean_sq / var;
  }
  e.evaluations = design.rows();
  e.notes["estimator"] = "jansen_total_order";
  e.notes["variance"] = std::to_string(var);
  e.notes["zero_variance"] = zero_variance ? "true" : "false";
  return e;
}

CoalitionValue model_coalition_value(const AttributionContext& ctx, const Units& units, const PerturbationConfig& cfg,
                                     std::vector<std::string>* warnings) {
  return [&ctx, &units, &cfg, warnings](const MaskMatrix& design) {
    return ctx.scorer.score_batch(apply_masks(ctx.tok, ctx.tokenizer, design, units, cfg, warnings));
  };
}

AttributionResult make_result(const AttributionContext& ctx, const Units& units, std::vector<double> scores,
                              std::string method) {
  AttributionResult r;
  r.units = units.labels;
  r.scores = std::move(scores);
  r.granularity = ctx.granularity;
  r.target = ctx.scorer.target();
  r.method = std::move(method);
  r.inference_mode = ctx.scorer.mode();
  r.diagnostics.n_model_calls = ctx.scorer.model_calls();
  r.diagnostics.seed = ctx.seed;
  if (r.target.kind == Target::Kind::kGeneratedToken) r.diagnostics.notes["generation_score"] = "teacher_forced";
  return r;
}

namespace {

template <typename EstimatorFn>
AttributionResult run_estimator(const AttributionContext& ctx, const PerturbationConfig& cfg, const char* method,
                                EstimatorFn estimator) {
  ctx.scorer.reset_calls();
  const Units units = make_units(ctx.tok, ctx.granularity);
  std::vector<std::string> warnings;
  Rng rng(ctx.seed);
  Estimate e = estimator(units.size(), model_coalition_value(ctx, units, cfg, &warnings), cfg, rng);
  AttributionResult r = make_result(ctx, units, std::move(e.scores), method);
  // apply_masks is called once per design; keep each distinct warning once.
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  r.diagnostics.warnings = std::move(warnings);
  for (auto& [k, v] : e.notes) r.diagnostics.notes[k] = v;
  return r;
}

}  // namespace

AttributionResult occlusion(const AttributionContext& ctx, const PerturbationConfig& cfg) {
  ctx.scorer.reset_calls();
  const Units units = make_units(ctx.tok, ctx.granularity);
  std::vector<std::string> warnings;
  // One single-row design per unit keeps this path independent of the
  // batched pipeline implementation.
  const double full = ctx.scorer.score(ctx.tok.token_ids);
  std::vector<double> scores(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    MaskMatrix single{MaskRows::Ones(1, static_cast<Eigen::Index>(units.size())), DesignKind::kOcclusion};
    single.masks(0, static_cast<Eigen::Index>(i)) = 0;
    const auto seq = apply_masks(ctx.tok, ctx.tokenizer, single, units, cfg, &warnings);
    scores[i] = full - ctx.scorer.score(seq.front());
  }
  AttributionResult r = make_result(ctx, units, std::move(scores), "occlusion");
  std::sort(warnings.begin(), warnings.end());
  warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
  r.diagnostics.warnings = std::move(warnings);
  return r;
}

AttributionResult lime(const AttributionContext& ctx, const PerturbationConfig& cfg) {
  return run_estimator(ctx, cfg, "lime", estimate_lime);
}

AttributionResult kernelshap(const AttributionContext& ctx, const PerturbationConfig& cfg) {
  return run_estimator(ctx, cfg, "kernelshap", estimate_kernelshap);
}

AttributionResult sobol(const AttributionContext& ctx, const PerturbationConfig& cfg) {
  return run_estimator(ctx, cfg, "sobol", estimate_sobol);
}

}  // namespace lexplain
