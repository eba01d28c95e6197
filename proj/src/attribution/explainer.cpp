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

#include "lexplain/attribution/explainer.hpp"

#include <algorithm>

namespace lexplain {

const std::vector<std::string>& attribution_methods() {
  static const std::vector<std::string> kMethods = {
      "occlusion", "lime",       "kernelshap", "sobol",   "saliency",     "input_x_gradient",
      "integrated_gradients",    "smoothgrad", "squaregrad", "vargrad", "gradient_shap"};
  return kMethods;
}

bool is_gradient_method(std::string_view method) {
  return method == "saliency" || method == "input_x_gradient" || method == "integrated_gradients" ||
         method == "smoothgrad" || method == "squaregrad" || method == "vargrad" || method == "gradient_shap";
}

AttributionExplainer::AttributionExplainer(std::shared_ptr<const ModelAdapter> model,
                                           std::shared_ptr<const Tokenizer> tokenizer, ExplainerConfig config)
    : model_(std::move(model)), tokenizer_(std::move(tokenizer)), config_(std::move(config)) {
  require(model_ != nullptr && tokenizer_ != nullptr, ErrorCode::kInvalidConfig, "explainer needs a model and tokenizer");
  const auto& methods = attribution_methods();
  require(std::find(methods.begin(), methods.end(), config_.method) != methods.end(), ErrorCode::kUnknownMethod,
          "unknown attribution method '" + config_.method + "'");
  config_.perturbation.validate();
  config_.gradient.validate();
}

TargetScorer AttributionExplainer::make_scorer(const Target& resolved, const std::vector<TokenId>& generated) const {
  std::vector<TokenId> prefix;
  if (resolved.kind == Target::Kind::kGeneratedToken) {
    const auto p = static_cast<std::size_t>(*resolved.output_position);
    require(p <= generated.size(), ErrorCode::kInvalidTarget, "output position beyond generated length");
    prefix.assign(generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(p));
  }
  return TargetScorer(model_, resolved, config_.inference_mode, std::move(prefix), config_.batch_size);
}

AttributionResult AttributionExplainer::attribute(const TokenizedText& tok, const TargetScorer& scorer) const {
  const AttributionContext ctx{scorer, *tokenizer_, tok, config_.granularity, config_.seed};
  const auto& m = config_.method;
  if (m == "occlusion") return occlusion(ctx, config_.perturbation);
  if (m == "lime") return lime(ctx, config_.perturbation);
  if (m == "kernelshap") return kernelshap(ctx, config_.perturbation);
  if (m == "sobol") return sobol(ctx, config_.perturbation);
  if (m == "saliency") return saliency(ctx, config_.gradient);
  if (m == "input_x_gradient") return input_x_gradient(ctx, config_.gradient);
  if (m == "integrated_gradients") return integrated_gradients(ctx, config_.gradient);
  if (m == "smoothgrad") return noise_ensemble(ctx, config_.gradient, NoiseVariant::kSmoothGrad);
  if (m == "squaregrad") return noise_ensemble(ctx, config_.gradient, NoiseVariant::kSquareGrad);
  if (m == "vargrad") return noise_ensemble(ctx, config_.gradient, NoiseVariant::kVarGrad);
  if (m == "gradient_shap") return gradient_shap(ctx, config_.gradient);
  fail(ErrorCode::kUnknownMethod, "unknown attribution method '" + m + "'");
}

Explanation AttributionExplainer::explain(const std::string& text, const std::optional<std::vector<Target>>& targets) const {
  Explanation out;
  out.text = text;
  out.tokens = tokenizer_->encode(text);

  std::vector<Target> resolved;
  if (model_->task() == Task::kClassification) {
    if (targets) {
      for (const auto& t : *targets) {
        require(t.kind == Target::Kind::kClassIndex && t.class_index, ErrorCode::kInvalidTarget,
                "classification targets must be class indices");
        require(*t.class_index >= 0 && static_cast<std::size_t>(*t.class_index) < model_->num_outputs(),
                ErrorCode::kInvalidTarget, "class index " + std::to_string(*t.class_index) + " out of range");
        resolved.push_back(Target::for_class(*t.class_index));
      }
    } else {
      const Mat logits = model_->forward_ids(out.tokens.token_ids);
      Eigen::Index best = 0;
      logits.row(0).maxCoeff(&best);
      resolved.push_back(Target::for_class(static_cast<int>(best)));
    }
  } else {
    if (targets) {
      for (const auto& t : *targets) {
        require(t.kind == Target::Kind::kGeneratedToken && t.output_position && *t.output_position >= 0,
                ErrorCode::kInvalidTarget, "generation targets must carry an output position");
      }
    }
    out.generated = greedy_generate(*model_, *tokenizer_, out.tokens.token_ids, config_.max_new_tokens);
    for (TokenId id : out.generated) out.generated_tokens.push_back(tokenizer_->display(id));
    if (targets) {
      for (const auto& t : *targets) {
        const auto p = static_cast<std::size_t>(*t.output_position);
        require(p < out.generated.size(), ErrorCode::kInvalidTarget,
                "output position " + std::to_string(p) + " beyond generated length " +
                    std::to_string(out.generated.size()));
        Target r = Target::for_position(static_cast<int>(p));
        r.token_id = t.token_id.value_or(out.generated[p]);
        require(*r.token_id >= 0 && static_cast<std::size_t>(*r.token_id) < model_->vocab_size(),
                ErrorCode::kInvalidTarget, "target token out of vocabulary");
        resolved.push_back(r);
      }
    } else {
      for (std::size_t p = 0; p < out.generated.size(); ++p) {
        Target r = Target::for_position(static_cast<int>(p));
        r.token_id = out.generated[p];
        resolved.push_back(r);
      }
    }
    for (auto& r : resolved) r.token = tokenizer_->display(*r.token_id);
  }

  for (const auto& target : resolved) {
    const TargetScorer scorer = make_scorer(target, out.generated);
    out.results.push_back(attribute(out.tokens, scorer));
  }
  return out;
}

std::vector<AttributionResult> AttributionExplainer::explain(
    const std::vector<std::string>& inputs, const std::optional<std::vector<std::vector<Target>>>& targets) const {
  require(!inputs.empty(), ErrorCode::kEmptyInput, "no inputs to explain");
  require(!targets || targets->size() == inputs.size(), ErrorCode::kInvalidTarget,
          "targets must be given per input");
  std::vector<AttributionResult> out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::optional<std::vector<Target>> t;
    if (targets) t = (*targets)[i];
    auto e = explain(inputs[i], t);
    for (auto& r : e.results) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lexplain
