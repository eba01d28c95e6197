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
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexplain/common.hpp"
#include "lexplain/tokenizer.hpp"

namespace lexplain {

enum class Granularity { kToken, kWord, kSentence };
enum class InferenceMode { kLogits, kSoftmax, kLogSoftmax };
enum class Reduce { kSum, kMean, kMax };

std::string_view to_string(Granularity g);
std::string_view to_string(InferenceMode m);
Granularity parse_granularity(std::string_view name);
InferenceMode parse_inference_mode(std::string_view name);

/// What to explain: a class for classification, an output position (and the
/// token generated there) for generation.
struct Target {
  enum class Kind { kClassIndex, kGeneratedToken };

  Kind kind = Kind::kClassIndex;
  std::optional<int> class_index;
  std::optional<int> output_position;
  std::optional<TokenId> token_id;
  /// Display form of token_id, filled once resolved.
  std::string token;

  static Target for_class(int index) { return {Kind::kClassIndex, index, std::nullopt, std::nullopt, {}}; }
  static Target for_position(int position) {
    return {Kind::kGeneratedToken, std::nullopt, position, std::nullopt, {}};
  }

  friend bool operator==(const Target&, const Target&) = default;
};

struct Diagnostics {
  std::size_t n_model_calls = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  /// Method-specific facts (estimator variant, zero-variance flags, ...).
  std::map<std::string, std::string> notes;

  friend bool operator==(const Diagnostics&, const Diagnostics&) = default;
};

struct AttributionResult {
  std::vector<std::string> units;
  std::vector<double> scores;
  Granularity granularity = Granularity::kWord;
  Target target;
  std::string method;
  InferenceMode inference_mode = InferenceMode::kLogits;
  Diagnostics diagnostics;

  /// Index of the highest score; ties go to the lower index.
  std::size_t top_unit() const;

  friend bool operator==(const AttributionResult&, const AttributionResult&) = default;
};

/// Interpretable units of a tokenized text: token positions per unit plus a
/// display label (the covered source text).
struct Units {
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<std::string> labels;

  std::size_t size() const { return tokens.size(); }
};

/// Special tokens are never part of a unit. Words follow TokenizedText
/// word_ids; sentences end after a ".", "!" or "?" word followed by whitespace.
Units make_units(const TokenizedText& tok, Granularity granularity);

/// Drops special tokens and reduces token scores over each unit.
std::vector<double> aggregate_to_granularity(std::span<const double> token_scores, const TokenizedText& tok,
                                             Granularity granularity, Reduce reduce = Reduce::kSum);

}  // namespace lexplain
