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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lexplain/common.hpp"
#include "lexplain/model.hpp"
#include "lexplain/tokenizer.hpp"

namespace lexplain {

enum class ActivationGranularity { kClsToken, kAllTokens, kNonSpecialTokens, kWordMean };

std::string_view to_string(ActivationGranularity g);
ActivationGranularity parse_activation_granularity(std::string_view name);

/// Where an activation row came from: the sample and the unit index inside
/// it. Unit indices count tokens for kAllTokens, non-special tokens for
/// kNonSpecialTokens, words for kWordMean, and are always 0 for kClsToken.
struct RowOrigin {
  std::size_t sample = 0;
  std::size_t unit = 0;

  friend bool operator==(const RowOrigin&, const RowOrigin&) = default;
};

/// n x d float32 activations with provenance.
struct ActivationBundle {
  MatF matrix;
  ActivationGranularity granularity = ActivationGranularity::kAllTokens;
  std::vector<RowOrigin> provenance;
  std::string split_point;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Selects rows of one sample's activations (s x d) according to `granularity`.
/// Throws kMissingClsToken for kClsToken when the first token is not special.
Mat select_rows(const Mat& activations, const TokenizedText& tok, ActivationGranularity granularity,
                std::vector<std::size_t>* units = nullptr);

ActivationBundle collect_activations(const SplitModel& split, const Tokenizer& tokenizer,
                                     const std::vector<std::string>& texts, ActivationGranularity granularity);

/// Surface string of provenance unit `unit` within `tok` (token, containing
/// word, or whole text depending on granularity).
std::string unit_text(const TokenizedText& tok, const Tokenizer& tokenizer, ActivationGranularity granularity,
                      std::size_t unit);

/// Binary activation cache: magic "LXACT\0\0\1", uint32 little-endian header
/// length, UTF-8 JSON header, then row-major little-endian float32 data.
void save_activations(const ActivationBundle& bundle, const std::filesystem::path& path);
ActivationBundle load_activations(const std::filesystem::path& path);

}  // namespace lexplain
