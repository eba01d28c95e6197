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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexplain/activations.hpp"
#include "lexplain/common.hpp"

namespace lexplain {

enum class ConceptKind { kNeurons, kKMeans, kPca, kSvd, kNmf, kSaeVanilla, kSaeTopK, kSaeBatchTopK };

std::string_view to_string(ConceptKind kind);
ConceptKind parse_concept_kind(std::string_view name);
const std::vector<std::string>& concept_kinds();
bool is_sae(ConceptKind kind);
/// PCA and SVD directions are defined up to sign.
bool is_sign_ambiguous(ConceptKind kind);

struct SAEConfig {
  std::size_t c = 32;
  /// Active concepts per row (TopK) or per row on average (BatchTopK).
  std::size_t k = 4;
  double l1_coef = 0.0;
  double lr = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// Train on per-feature standardized activations (recorded in the model).
  bool standardize = false;

  void validate(ConceptKind kind) const;
};

struct ConceptConfig {
  std::size_t c = 8;
  std::uint64_t seed = 0;
  /// Lloyd iterations (KMeans) or multiplicative updates (NMF).
  std::size_t max_iters = 300;
  double tol = 1e-10;
  /// Used by the SAE kinds; its c and seed are overwritten by the fields above.
  SAEConfig sae;
};

nlohmann::ordered_json to_json(const ConceptConfig& cfg, ConceptKind kind);
ConceptConfig concept_config_from_json(const nlohmann::json& j);

struct FitMeta {
  std::uint64_t seed = 0;
  std::size_t n_iters = 0;
  double final_loss = 0.0;
  /// Objective per iteration (KMeans inertia, NMF Frobenius error) or mean
  /// training loss per epoch (SAEs).
  std::vector<double> loss_history;
  /// SAEs: concepts never active during the final epoch.
  std::vector<std::size_t> dead_concepts;
};

/// A fitted mapping between activation space (width d) and concept space
/// (width c). Immutable and shareable; encode/decode are pure.
///
/// Parameters are held at float32 precision so that a saved and reloaded
/// model reproduces encode() bitwise.
class ConceptModel {
 public:
  ConceptModel() = default;

  ConceptKind kind() const { return kind_; }
  std::size_t concepts() const { return static_cast<std::size_t>(dictionary_.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(dictionary_.cols()); }
  /// c x d; one row per concept direction.
  const Mat& dictionary() const { return dictionary_; }
  const FitMeta& fit_meta() const { return meta_; }
  const ConceptConfig& config() const { return config_; }
  double shift() const { return shift_; }
  std::size_t k() const { return k_; }

  /// n x d -> n x c. Throws kDimensionMismatch on width mismatch.
  Mat encode(const Mat& activations) const;
  /// Pre-mask encoder output for SAEs (n x c); encode() for other kinds.
  Mat pre_activations(const Mat& activations) const;
  /// n x c -> n x d.
  Mat decode(const Mat& codes) const;
  /// Vector-Jacobian product of decode: dL/dcodes given dL/dactivations.
  Mat decode_backward(const Mat& dactivations) const;

  Mat reconstruct(const Mat& activations) const { return decode(encode(activations)); }

  /// Provenance of the activations the model was fitted on (optional).
  nlohmann::ordered_json source;

  void save(const std::filesystem::path& path) const;
  /// Throws kFormat ("unrecognized concept model file") on a bad magic.
  static ConceptModel load(const std::filesystem::path& path);

  /// Builds a model from explicit parameters (tests and external dictionaries).
  static ConceptModel from_dictionary(ConceptKind kind, const Mat& dictionary, const Vec& mean = Vec());

 private:
  friend ConceptModel fit_concepts(ConceptKind, const Mat&, const ConceptConfig&);
  friend ConceptModel train_sae(const Mat&, const SAEConfig&, ConceptKind,
                                const std::function<void(std::size_t, double)>&);

  Mat standardized(const Mat& a) const;
  void round_parameters();

  ConceptKind kind_ = ConceptKind::kNeurons;
  Mat dictionary_;
  /// Centering offset (PCA), or the decoder bias (SAEs).
  Vec offset_;
  // SAE encoder.
  Mat encoder_weight_;  // d x c
  Vec encoder_bias_;    // c
  // Optional standardization (SAEs).
  Vec std_mean_;
  Vec std_scale_;
  double shift_ = 0.0;
  std::size_t k_ = 0;
  ConceptConfig config_;
  FitMeta meta_;
};

/// Fits a concept model of `kind` to the rows of `activations`.
/// Errors: kInsufficientData (n < c for factorization kinds, or n == 0),
/// kInvalidActivations (non-finite entries), kInvalidConfig.
ConceptModel fit_concepts(ConceptKind kind, const Mat& activations, const ConceptConfig& cfg);
ConceptModel fit_concepts(ConceptKind kind, const ActivationBundle& bundle, const ConceptConfig& cfg);

/// Mini-batch Adam on MSE (+ l1_coef * L1 for the vanilla variant) with
/// decoder rows renormalized after each step. `on_epoch(epoch, mean_loss)`
/// is called after every epoch. Throws kTrainingDiverged with the step index.
ConceptModel train_sae(const Mat& activations, const SAEConfig& cfg, ConceptKind variant,
                       const std::function<void(std::size_t, double)>& on_epoch = {});

/// Float32 boundary helpers.
inline Mat to_double(const MatF& m) { return m.cast<double>(); }
inline MatF to_float(const Mat& m) { return m.cast<float>(); }

}  // namespace lexplain
