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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexplain/common.hpp"

namespace lexplain {

/// Half-open byte span [begin, end) into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

/// Token ids plus everything needed to map tokens back to words and text.
struct TokenizedText {
  std::vector<TokenId> token_ids;
  std::vector<Span> offsets;
  /// Word group per token; special tokens carry std::nullopt.
  std::vector<std::optional<int>> word_ids;
  std::vector<bool> special_mask;
  std::string text;

  std::size_t size() const { return token_ids.size(); }
  int num_words() const;
  std::size_t num_non_special() const;
  /// Sentence index per word (see sentence_ids()).
  std::vector<int> sentence_of_word() const;
  /// Throws kInvalidInput when an invariant is violated.
  void validate() const;
};

/// Special-token framing applied around the encoded words.
struct Framing {
  bool add_cls = true;
  bool add_sep = true;
};

/// WordPiece-style tokenizer: text is split into words on whitespace and
/// ASCII punctuation, then each word is encoded greedily with the longest
/// matching vocabulary entry; continuation pieces carry a "##" prefix.
/// Words that cannot be encoded become a single [UNK] token.
class Tokenizer {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";
  static constexpr std::string_view kMask = "[MASK]";
  static constexpr std::string_view kUnk = "[UNK]";

  /// `vocab` lists every token string; bracketed entries such as "[PAD]" are special.
  Tokenizer(std::vector<std::string> vocab, Framing framing, bool lowercase = true);

  TokenizedText encode(std::string_view text) const;

  std::size_t vocab_size() const { return vocab_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool is_special(TokenId id) const;
  const Framing& framing() const { return framing_; }

  TokenId pad_id() const;
  TokenId unk_id() const;
  std::optional<TokenId> cls_id() const { return cls_; }
  std::optional<TokenId> sep_id() const { return sep_; }
  std::optional<TokenId> mask_id() const { return mask_; }

  /// Human-readable rendering of a token: continuation markers stripped.
  std::string display(TokenId id) const;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, TokenId> index_;
  std::vector<bool> special_;
  Framing framing_;
  bool lowercase_;
  std::optional<TokenId> pad_, cls_, sep_, mask_, unk_;
};

/// Vocabulary shared by the built-in reference models (256 entries).
std::vector<std::string> builtin_vocabulary();

/// Word spans of `text` according to the segmentation rule used by the
/// tokenizer: whitespace separates words and every ASCII punctuation
/// character is a word of its own.
std::vector<Span> split_words(std::string_view text);

bool is_valid_utf8(std::string_view text);

}  // namespace lexplain
