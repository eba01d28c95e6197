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
#include <limits>

#include "lexplain/attribution/types.hpp"

namespace lexplain {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kToken: return "token";
    case Granularity::kWord: return "word";
    case Granularity::kSentence: return "sentence";
  }
  return "word";
}

std::string_view to_string(InferenceMode m) {
  switch (m) {
    case InferenceMode::kLogits: return "logits";
    case InferenceMode::kSoftmax: return "softmax";
    case InferenceMode::kLogSoftmax: return "log_softmax";
  }
  return "logits";
}

Granularity parse_granularity(std::string_view name) {
  for (auto g : {Granularity::kToken, Granularity::kWord, Granularity::kSentence}) {
    if (to_string(g) == name) return g;
  }
  fail(ErrorCode::kInvalidConfig, "unknown granularity '" + std::string(name) + "'");
}

InferenceMode parse_inference_mode(std::string_view name) {
  for (auto m : {InferenceMode::kLogits, InferenceMode::kSoftmax, InferenceMode::kLogSoftmax}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorCode::kInvalidConfig, "unknown inference mode '" + std::string(name) + "'");
}

std::size_t AttributionResult::top_unit() const {
  require(!scores.empty(), ErrorCode::kEmptyResult, "attribution without units");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Units make_units(const TokenizedText& tok, Granularity granularity) {
  Units u;
  std::vector<int> group(tok.size(), -1);
  if (granularity == Granularity::kToken) {
    int next = 0;
    for (std::size_t t = 0; t < tok.size(); ++t) {
      if (!tok.special_mask[t]) group[t] = next++;
    }
  } else {
    const std::vector<int> sentence = granularity == Granularity::kSentence ? tok.sentence_of_word() : std::vector<int>();
    for (std::size_t t = 0; t < tok.size(); ++t) {
      if (!tok.word_ids[t]) continue;
      const int w = *tok.word_ids[t];
      group[t] = granularity == Granularity::kWord ? w : sentence[static_cast<std::size_t>(w)];
    }
  }
  const int n = group.empty() ? 0 : *std::max_element(group.begin(), group.end()) + 1;
  u.tokens.resize(static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < tok.size(); ++t) {
    if (group[t] >= 0) u.tokens[static_cast<std::size_t>(group[t])].push_back(t);
  }
  for (const auto& positions : u.tokens) {
    const std::size_t begin = tok.offsets[positions.front()].begin;
    const std::size_t end = tok.offsets[positions.back()].end;
    u.labels.push_back(tok.text.substr(begin, end - begin));
  }
  return u;
}

std::vector<double> aggregate_to_granularity(std::span<const double> token_scores, const TokenizedText& tok,
                                             Granularity granularity, Reduce reduce) {
  require(token_scores.size() == tok.size(), ErrorCode::kDimensionMismatch,
          "got " + std::to_string(token_scores.size()) + " token scores for " + std::to_string(tok.size()) +
              " tokens");
  const Units units = make_units(tok, granularity);
  std::vector<double> out;
  out.reserve(units.size());
  for (const auto& positions : units.tokens) {
    double acc = reduce == Reduce::kMax ? -std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t t : positions) {
      acc = reduce == Reduce::kMax ? std::max(acc, token_scores[t]) : acc + token_scores[t];
    }
    if (reduce == Reduce::kMean) acc /= static_cast<double>(positions.size());
    out.push_back(acc);
  }
  return out;
}

}  // namespace lexplain
