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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexplain/common.hpp"
#include "lexplain/tokenizer.hpp"

namespace lexplain {

enum class Task { kClassification, kGeneration };

std::string_view to_string(Task task);

/// A differentiable stage mapping an (s x d_in) matrix to an (s' x d_out) matrix.
/// Layers hold no mutable state; backward() recomputes what it needs from `x`.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Mat forward(const Mat& x) const = 0;
  /// Vector-Jacobian product: returns dL/dx given dL/dy at input `x`.
  virtual Mat backward(const Mat& x, const Mat& dy) const = 0;
};

/// A language model seen as: token embedding lookup, an ordered registry of
/// named layers, and an output head. Generation heads emit one row of logits
/// per position (s x vocab); classification heads emit a single row (1 x classes).
///
/// Instances are immutable once built and may be shared across threads.
class ModelAdapter {
 public:
  struct NamedLayer {
    std::string name;
    std::shared_ptr<const Layer> layer;
  };

  ModelAdapter(std::string name, Task task, Mat embedding_table, std::vector<NamedLayer> layers,
               std::shared_ptr<const Layer> head, std::size_t num_outputs, std::size_t max_length);

  const std::string& name() const { return name_; }
  Task task() const { return task_; }
  std::size_t vocab_size() const { return static_cast<std::size_t>(embedding_table_.rows()); }
  std::size_t embedding_dim() const { return static_cast<std::size_t>(embedding_table_.cols()); }
  /// Number of classes (classification) or vocabulary entries (generation).
  std::size_t num_outputs() const { return num_outputs_; }
  std::size_t max_length() const { return max_length_; }

  std::vector<std::string> layer_names() const;
  std::size_t num_layers() const { return layers_.size(); }
  std::optional<std::size_t> layer_index(std::string_view name) const;

  /// Token embeddings (s x embedding_dim), before any positional signal.
  Mat embed(std::span<const TokenId> ids) const;
  Mat forward(const Mat& embeddings) const;
  Mat forward_ids(std::span<const TokenId> ids) const;
  /// Gradient of <dlogits, forward(embeddings)> with respect to the embeddings.
  Mat backward(const Mat& embeddings, const Mat& dlogits) const;

  /// Applies layers [first, last) to `x`.
  Mat forward_layers(const Mat& x, std::size_t first, std::size_t last) const;
  Mat forward_head(const Mat& hidden) const { return head_->forward(hidden); }
  /// Backpropagates `dlogits` through the head and layers [first, num_layers())
  /// where `x` is the input of layer `first`.
  Mat backward_from(const Mat& x, std::size_t first, const Mat& dlogits) const;

 private:
  std::string name_;
  Task task_;
  Mat embedding_table_;
  std::vector<NamedLayer> layers_;
  std::shared_ptr<const Layer> head_;
  std::size_t num_outputs_;
  std::size_t max_length_;
};

/// Feature extractor / predictor pair obtained by cutting an adapter after a
/// named layer. Activations are the output of that layer, exactly as the
/// layer emits it (for transformer blocks: the residual stream after the block).
class SplitModel {
 public:
  /// Throws kUnknownSplitPoint (listing the valid names) for an unknown layer.
  SplitModel(std::shared_ptr<const ModelAdapter> adapter, std::string split_point);

  const ModelAdapter& adapter() const { return *adapter_; }
  std::shared_ptr<const ModelAdapter> adapter_ptr() const { return adapter_; }
  const std::string& split_point() const { return split_point_; }

  Mat extract(std::span<const TokenId> ids) const;
  Mat extract_embeddings(const Mat& embeddings) const;
  Mat predict(const Mat& activations) const;
  /// dScore/dActivations for score = <dlogits, predict(activations)>.
  Mat predict_backward(const Mat& activations, const Mat& dlogits) const;

 private:
  std::shared_ptr<const ModelAdapter> adapter_;
  std::string split_point_;
  std::size_t split_index_;
};

/// Greedy decoding; special tokens are never emitted.
std::vector<TokenId> greedy_generate(const ModelAdapter& model, const Tokenizer& tokenizer,
                                     std::span<const TokenId> prompt, std::size_t max_new_tokens);

// ---------------------------------------------------------------------------
// Reference models.

struct TinyTransformerOptions {
  std::size_t hidden = 32;
  std::size_t mlp_hidden = 64;
  std::size_t num_layers = 2;
  std::size_t num_classes = 2;
  std::size_t max_length = 128;
  std::uint64_t seed = 20240611;
};

/// Seeded pre-LayerNorm transformer over the built-in vocabulary. Generation
/// mode uses causal attention and an unembedding head (no final norm, so the
/// predictor after the last block is exactly the unembedding). Classification
/// mode attends bidirectionally and reads the [CLS] row.
/// Layers: "embeddings", "layer_1", ..., "layer_<num_layers>".
std::shared_ptr<const ModelAdapter> make_tiny_transformer(Task task, const TinyTransformerOptions& options = {});

/// Bag-of-words classifier with logits (0, sum_i w(token_i) + bias).
/// Embedding coordinate 0 holds w(token); coordinates 1.. hold `features`
/// (vocab x k, may be empty). Special tokens embed to zero.
/// Layers: "embeddings", "pooled" ([CLS] row receives the sum of all rows).
std::shared_ptr<const ModelAdapter> make_linear_bag_of_words(const Tokenizer& tokenizer,
                                                             const std::map<std::string, double>& word_weights,
                                                             double bias = 0.0, const Mat& features = Mat());

struct LoadedModel {
  std::shared_ptr<const ModelAdapter> model;
  std::shared_ptr<const Tokenizer> tokenizer;
};

struct ReferenceModels {
  LoadedModel tiny_transformer;
  LoadedModel linear_bag_of_words;
};

ReferenceModels reference_models();

/// Tokenizer used by the built-in models. `generation` selects [CLS]-only
/// framing (the [CLS] token doubles as beginning-of-sequence).
std::shared_ptr<const Tokenizer> builtin_tokenizer(bool generation);

/// Name -> factory registry. Built-ins: "tiny-gen", "tiny-cls", "linear-bow".
/// Integrations register external adapters under their own names.
class ModelRegistry {
 public:
  using Factory = std::function<LoadedModel()>;

  static ModelRegistry& global();

  void add(std::string name, Factory factory);
  bool contains(std::string_view name) const;
  LoadedModel load(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  ModelRegistry();
  std::map<std::string, Factory, std::less<>> factories_;
};

}  // namespace lexplain
