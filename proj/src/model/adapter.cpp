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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "layers.hpp"
#include "lexplain/model.hpp"
#include "lexplain/random.hpp"

namespace lexplain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kUnknownSplitPoint: return "UnknownSplitPoint";
    case ErrorCode::kMissingClsToken: return "MissingClsToken";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewUnits: return "TooFewUnits";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kInvalidTarget: return "InvalidTarget";
    case ErrorCode::kUnknownMethod: return "UnknownMethod";
    case ErrorCode::kPipelineContract: return "PipelineContractError";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidActivations: return "InvalidActivations";
    case ErrorCode::kTrainingDiverged: return "TrainingDiverged";
    case ErrorCode::kUnsupportedTask: return "UnsupportedTask";
    case ErrorCode::kLabelingUnavailable: return "LabelingUnavailable";
    case ErrorCode::kMissingCounterpart: return "MissingCounterpart";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

std::string_view to_string(Task task) {
  return task == Task::kClassification ? "classification" : "generation";
}

ModelAdapter::ModelAdapter(std::string name, Task task, Mat embedding_table, std::vector<NamedLayer> layers,
                           std::shared_ptr<const Layer> head, std::size_t num_outputs, std::size_t max_length)
    : name_(std::move(name)),
      task_(task),
      embedding_table_(std::move(embedding_table)),
      layers_(std::move(layers)),
      head_(std::move(head)),
      num_outputs_(num_outputs),
      max_length_(max_length) {
  require(head_ != nullptr, ErrorCode::kInvalidConfig, "model without head");
  require(!layers_.empty(), ErrorCode::kInvalidConfig, "model without layers");
}

std::vector<std::string> ModelAdapter::layer_names() const {
  std::vector<std::string> names;
  names.reserve(layers_.size());
  for (const auto& l : layers_) names.push_back(l.name);
  return names;
}

std::optional<std::size_t> ModelAdapter::layer_index(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == name) return i;
  }
  return std::nullopt;
}

Mat ModelAdapter::embed(std::span<const TokenId> ids) const {
  require(!ids.empty(), ErrorCode::kEmptyInput, "empty token sequence");
  require(ids.size() <= max_length_, ErrorCode::kInvalidInput,
          "sequence of " + std::to_string(ids.size()) + " tokens exceeds maximum " + std::to_string(max_length_));
  Mat out(static_cast<Eigen::Index>(ids.size()), embedding_table_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < vocab_size(), ErrorCode::kInvalidInput,
            "token id out of range: " + std::to_string(ids[i]));
    out.row(static_cast<Eigen::Index>(i)) = embedding_table_.row(ids[i]);
  }
  return out;
}

Mat ModelAdapter::forward_layers(const Mat& x, std::size_t first, std::size_t last) const {
  Mat h = x;
  for (std::size_t i = first; i < last; ++i) h = layers_[i].layer->forward(h);
  return h;
}

Mat ModelAdapter::forward(const Mat& embeddings) const {
  return head_->forward(forward_layers(embeddings, 0, layers_.size()));
}

Mat ModelAdapter::forward_ids(std::span<const TokenId> ids) const { return forward(embed(ids)); }

Mat ModelAdapter::backward_from(const Mat& x, std::size_t first, const Mat& dlogits) const {
  std::vector<Mat> inputs;
  inputs.reserve(layers_.size() - first + 1);
  inputs.push_back(x);
  for (std::size_t i = first; i < layers_.size(); ++i) inputs.push_back(layers_[i].layer->forward(inputs.back()));
  Mat grad = head_->backward(inputs.back(), dlogits);
  for (std::size_t i = layers_.size(); i-- > first;) {
    grad = layers_[i].layer->backward(inputs[i - first], grad);
  }
  return grad;
}

Mat ModelAdapter::backward(const Mat& embeddings, const Mat& dlogits) const {
  return backward_from(embeddings, 0, dlogits);
}

SplitModel::SplitModel(std::shared_ptr<const ModelAdapter> adapter, std::string split_point)
    : adapter_(std::move(adapter)), split_point_(std::move(split_point)) {
  require(adapter_ != nullptr, ErrorCode::kInvalidConfig, "null adapter");
  auto index = adapter_->layer_index(split_point_);
  if (!index) {
    std::ostringstream msg;
    msg << "'" << split_point_ << "' is not a layer of " << adapter_->name() << "; valid split points:";
    for (const auto& n : adapter_->layer_names()) msg << ' ' << n;
    fail(ErrorCode::kUnknownSplitPoint, msg.str());
  }
  split_index_ = *index;
}

Mat SplitModel::extract(std::span<const TokenId> ids) const { return extract_embeddings(adapter_->embed(ids)); }

Mat SplitModel::extract_embeddings(const Mat& embeddings) const {
  return adapter_->forward_layers(embeddings, 0, split_index_ + 1);
}

Mat SplitModel::predict(const Mat& activations) const {
  return adapter_->forward_head(adapter_->forward_layers(activations, split_index_ + 1, adapter_->num_layers()));
}

Mat SplitModel::predict_backward(const Mat& activations, const Mat& dlogits) const {
  return adapter_->backward_from(activations, split_index_ + 1, dlogits);
}

std::vector<TokenId> greedy_generate(const ModelAdapter& model, const Tokenizer& tokenizer,
                                     std::span<const TokenId> prompt, std::size_t max_new_tokens) {
  require(model.task() == Task::kGeneration, ErrorCode::kUnsupportedTask,
          "greedy generation needs a generation model");
  std::vector<TokenId> seq(prompt.begin(), prompt.end());
  std::vector<TokenId> generated;
  for (std::size_t step = 0; step < max_new_tokens && seq.size() < model.max_length(); ++step) {
    const Mat logits = model.forward_ids(seq);
    const auto last = logits.row(logits.rows() - 1);
    TokenId best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < last.size(); ++v) {
      if (tokenizer.is_special(static_cast<TokenId>(v))) continue;
      if (last(v) > best_value) {
        best_value = last(v);
        best = static_cast<TokenId>(v);
      }
    }
    seq.push_back(best);
    generated.push_back(best);
  }
  return generated;
}

namespace {

Mat random_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, stddev);
  }
  return m;
}

RowVec random_row(Rng& rng, Eigen::Index n, double mean, double stddev) {
  RowVec r(n);
  for (Eigen::Index j = 0; j < n; ++j) r(j) = rng.normal(mean, stddev);
  return r;
}

}  // namespace

std::shared_ptr<const ModelAdapter> make_tiny_transformer(Task task, const TinyTransformerOptions& o) {
  const auto vocab = static_cast<Eigen::Index>(builtin_vocabulary().size());
  const auto d = static_cast<Eigen::Index>(o.hidden);
  const auto m = static_cast<Eigen::Index>(o.mlp_hidden);
  Rng rng(o.seed);

  Mat embedding = random_normal(rng, vocab, d, 1.0);
  std::vector<ModelAdapter::NamedLayer> layers;
  layers.push_back({"embeddings", std::make_shared<detail::PositionalEmbedding>(
                                      random_normal(rng, static_cast<Eigen::Index>(o.max_length), d, 0.5))});
  const double wd = 1.0 / std::sqrt(static_cast<double>(d));
  const double wm = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t l = 0; l < o.num_layers; ++l) {
    detail::TransformerBlock::Params p;
    p.ln1 = {random_row(rng, d, 1.0, 0.1), random_row(rng, d, 0.0, 0.1)};
    p.ln2 = {random_row(rng, d, 1.0, 0.1), random_row(rng, d, 0.0, 0.1)};
    p.wq = random_normal(rng, d, d, wd);
    p.wk = random_normal(rng, d, d, wd);
    p.wv = random_normal(rng, d, d, wd);
    p.wo = random_normal(rng, d, d, wd);
    p.w1 = random_normal(rng, d, m, wd);
    p.c1 = random_row(rng, m, 0.0, 0.1);
    p.w2 = random_normal(rng, m, d, wm);
    p.c2 = random_row(rng, d, 0.0, 0.1);
    layers.push_back({"layer_" + std::to_string(l + 1),
                      std::make_shared<detail::TransformerBlock>(std::move(p), task == Task::kGeneration)});
  }

  std::shared_ptr<const Layer> head;
  std::size_t outputs = 0;
  if (task == Task::kGeneration) {
    head = std::make_shared<detail::LinearHead>(random_normal(rng, vocab, d, wd), RowVec::Zero(vocab));
    outputs = static_cast<std::size_t>(vocab);
  } else {
    const auto c = static_cast<Eigen::Index>(o.num_classes);
    head = std::make_shared<detail::FirstRowHead>(random_normal(rng, c, d, wd), random_row(rng, c, 0.0, 0.1));
    outputs = o.num_classes;
  }
  const char* name = task == Task::kGeneration ? "tiny-gen" : "tiny-cls";
  return std::make_shared<ModelAdapter>(name, task, std::move(embedding), std::move(layers), std::move(head),
                                        outputs, o.max_length);
}

std::shared_ptr<const ModelAdapter> make_linear_bag_of_words(const Tokenizer& tokenizer,
                                                             const std::map<std::string, double>& word_weights,
                                                             double bias, const Mat& features) {
  const auto vocab = static_cast<Eigen::Index>(tokenizer.vocab_size());
  require(features.size() == 0 || features.rows() == vocab, ErrorCode::kDimensionMismatch,
          "feature table must have one row per vocabulary entry");
  const Eigen::Index extra = features.size() == 0 ? 0 : features.cols();
  Mat embedding = Mat::Zero(vocab, 1 + extra);
  for (const auto& [word, weight] : word_weights) {
    auto id = tokenizer.find(word);
    require(id.has_value(), ErrorCode::kInvalidConfig, "word '" + word + "' is not in the vocabulary");
    embedding(*id, 0) = weight;
  }
  if (extra > 0) embedding.rightCols(extra) = features;
  for (Eigen::Index v = 0; v < vocab; ++v) {
    if (tokenizer.is_special(static_cast<TokenId>(v))) embedding.row(v).setZero();
  }

  Mat head_weight = Mat::Zero(2, 1 + extra);
  head_weight(1, 0) = 1.0;
  RowVec head_bias(2);
  head_bias << 0.0, bias;

  std::vector<ModelAdapter::NamedLayer> layers;
  layers.push_back({"embeddings", std::make_shared<detail::Identity>()});
  layers.push_back({"pooled", std::make_shared<detail::SumIntoFirstRow>()});
  return std::make_shared<ModelAdapter>("linear-bow", Task::kClassification, std::move(embedding), std::move(layers),
                                        std::make_shared<detail::FirstRowHead>(head_weight, head_bias), 2, 512);
}

std::shared_ptr<const Tokenizer> builtin_tokenizer(bool generation) {
  static const auto kGen = std::make_shared<const Tokenizer>(builtin_vocabulary(), Framing{true, false});
  static const auto kCls = std::make_shared<const Tokenizer>(builtin_vocabulary(), Framing{true, true});
  return generation ? kGen : kCls;
}

namespace {

// Sentiment weights and three topic coordinates (sports, business, science)
// for the default bag-of-words model.
LoadedModel default_linear_bow() {
  auto tok = builtin_tokenizer(false);
  const std::map<std::string, double> sentiment = {
      {"great", 2.0},     {"excellent", 2.0}, {"wonderful", 1.5}, {"amazing", 1.5}, {"love", 1.0},
      {"loved", 1.0},     {"best", 1.0},      {"good", 1.0},      {"nice", 0.5},    {"fun", 0.5},
      {"happy", 0.5},     {"fine", 0.25},     {"bad", -1.0},      {"poor", -1.0},   {"dull", -0.5},
      {"boring", -1.0},   {"sad", -0.5},      {"hate", -1.0},     {"terrible", -2.0}, {"awful", -2.0},
      {"worst", -2.0}};
  const std::map<std::string, std::array<double, 3>> topics = {
      {"sports", {1.5, 0, 0}},   {"game", {1.0, 0, 0}},     {"match", {1.0, 0, 0}},   {"team", {1.0, 0, 0}},
      {"goal", {1.0, 0, 0}},     {"player", {0.8, 0, 0}},   {"season", {0.6, 0, 0}},  {"coach", {0.8, 0, 0}},
      {"league", {0.9, 0, 0}},   {"cup", {0.7, 0, 0}},      {"football", {1.2, 0, 0}}, {"score", {0.6, 0, 0}},
      {"business", {0, 1.5, 0}}, {"market", {0, 1.0, 0}},   {"stock", {0, 1.0, 0}},   {"company", {0, 0.9, 0}},
      {"price", {0, 0.7, 0}},    {"shares", {0, 0.9, 0}},   {"profit", {0, 1.0, 0}},  {"bank", {0, 0.8, 0}},
      {"trade", {0, 0.8, 0}},    {"economy", {0, 1.2, 0}},  {"sales", {0, 0.7, 0}},   {"oil", {0, 0.6, 0}},
      {"science", {0, 0, 1.5}},  {"research", {0, 0, 1.0}}, {"study", {0, 0, 0.9}},   {"space", {0, 0, 1.0}},
      {"computer", {0, 0, 1.0}}, {"software", {0, 0, 0.9}}, {"data", {0, 0, 0.8}},    {"internet", {0, 0, 0.8}},
      {"technology", {0, 0, 1.2}}, {"scientists", {0, 0, 1.0}}};
  Mat features = Mat::Zero(static_cast<Eigen::Index>(tok->vocab_size()), 3);
  for (const auto& [word, coords] : topics) {
    const auto id = *tok->find(word);
    for (int k = 0; k < 3; ++k) features(id, k) = coords[static_cast<std::size_t>(k)];
  }
  return {make_linear_bag_of_words(*tok, sentiment, 0.0, features), tok};
}

}  // namespace

ReferenceModels reference_models() {
  return {{make_tiny_transformer(Task::kGeneration), builtin_tokenizer(true)}, default_linear_bow()};
}

ModelRegistry::ModelRegistry() {
  factories_["tiny-gen"] = [] { return LoadedModel{make_tiny_transformer(Task::kGeneration), builtin_tokenizer(true)}; };
  factories_["tiny-cls"] = [] {
    return LoadedModel{make_tiny_transformer(Task::kClassification), builtin_tokenizer(false)};
  };
  factories_["linear-bow"] = [] { return default_linear_bow(); };
}

ModelRegistry& ModelRegistry::global() {
  static ModelRegistry registry;
  return registry;
}

void ModelRegistry::add(std::string name, Factory factory) { factories_[std::move(name)] = std::move(factory); }

bool ModelRegistry::contains(std::string_view name) const { return factories_.find(name) != factories_.end(); }

LoadedModel ModelRegistry::load(std::string_view name) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) {
    std::string known;
    for (const auto& [n, f] : factories_) known += " " + n;
    fail(ErrorCode::kInvalidConfig, "unknown model '" + std::string(name) + "'; known:" + known);
  }
  return it->second();
}

std::vector<std::string> ModelRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, f] : factories_) out.push_back(n);
  return out;
}

}  // namespace lexplain
