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

#include "lexplain/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace lexplain {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_bracketed(const std::string& s) {
  return s.size() >= 3 && s.front() == '[' && s.back() == ']';
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= text.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<Span> split_words(std::string_view text) {
  std::vector<Span> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (is_punct(text[i])) {
      words.push_back({i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) && !is_punct(text[j])) ++j;
    words.push_back({i, j});
    i = j;
  }
  return words;
}

int TokenizedText::num_words() const {
  int n = 0;
  for (const auto& w : word_ids) {
    if (w) n = std::max(n, *w + 1);
  }
  return n;
}

std::size_t TokenizedText::num_non_special() const {
  return static_cast<std::size_t>(std::count(special_mask.begin(), special_mask.end(), false));
}

std::vector<int> TokenizedText::sentence_of_word() const {
  // A sentence ends after a word that is exactly one of . ! ? and is followed
  // by whitespace (or the end of the text).
  const int n_words = num_words();
  std::vector<Span> word_span(static_cast<std::size_t>(n_words), Span{text.size(), 0});
  for (std::size_t t = 0; t < size(); ++t) {
    if (!word_ids[t]) continue;
    auto& s = word_span[static_cast<std::size_t>(*word_ids[t])];
    s.begin = std::min(s.begin, offsets[t].begin);
    s.end = std::max(s.end, offsets[t].end);
  }
  std::vector<int> sentence(static_cast<std::size_t>(n_words), 0);
  int current = 0;
  for (int w = 0; w < n_words; ++w) {
    sentence[static_cast<std::size_t>(w)] = current;
    const Span& s = word_span[static_cast<std::size_t>(w)];
    if (s.end == s.begin + 1) {
      const char c = text[s.begin];
      const bool terminal = c == '.' || c == '!' || c == '?';
      const bool followed_by_space = s.end >= text.size() || is_space(text[s.end]);
      if (terminal && followed_by_space) ++current;
    }
  }
  return sentence;
}

void TokenizedText::validate() const {
  const std::size_t n = token_ids.size();
  require(offsets.size() == n && word_ids.size() == n && special_mask.size() == n,
          ErrorCode::kInvalidInput, "tokenized field lengths differ");
  int last_word = -1;
  std::size_t last_end = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (special_mask[t]) {
      require(!word_ids[t].has_value(), ErrorCode::kInvalidInput, "special token carries a word id");
      continue;
    }
    require(word_ids[t].has_value(), ErrorCode::kInvalidInput, "non-special token without word id");
    require(*word_ids[t] >= last_word, ErrorCode::kInvalidInput, "word ids decrease");
    last_word = *word_ids[t];
    require(offsets[t].begin >= last_end && offsets[t].begin <= offsets[t].end &&
                offsets[t].end <= text.size(),
            ErrorCode::kInvalidInput, "token offsets overlap or exceed the text");
    last_end = offsets[t].end;
  }
}

Tokenizer::Tokenizer(std::vector<std::string> vocab, Framing framing, bool lowercase)
    : vocab_(std::move(vocab)), framing_(framing), lowercase_(lowercase) {
  require(!vocab_.empty(), ErrorCode::kInvalidConfig, "empty vocabulary");
  special_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    require(index_.emplace(vocab_[i], id).second, ErrorCode::kInvalidConfig,
            "duplicate vocabulary entry '" + vocab_[i] + "'");
    special_[i] = is_bracketed(vocab_[i]);
  }
  pad_ = find(kPad);
  cls_ = find(kCls);
  sep_ = find(kSep);
  mask_ = find(kMask);
  unk_ = find(kUnk);
  require(pad_.has_value(), ErrorCode::kInvalidConfig, "vocabulary lacks [PAD]");
  require(unk_.has_value(), ErrorCode::kInvalidConfig, "vocabulary lacks [UNK]");
  require(!framing_.add_cls || cls_, ErrorCode::kInvalidConfig, "framing needs [CLS]");
  require(!framing_.add_sep || sep_, ErrorCode::kInvalidConfig, "framing needs [SEP]");
}

const std::string& Tokenizer::token(TokenId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < vocab_.size(), ErrorCode::kInvalidInput,
          "token id out of range: " + std::to_string(id));
  return vocab_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Tokenizer::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Tokenizer::is_special(TokenId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < special_.size() && special_[static_cast<std::size_t>(id)];
}

TokenId Tokenizer::pad_id() const { return *pad_; }
TokenId Tokenizer::unk_id() const { return *unk_; }

std::string Tokenizer::display(TokenId id) const {
  const std::string& t = token(id);
  if (t.rfind("##", 0) == 0) return t.substr(2);
  return t;
}

TokenizedText Tokenizer::encode(std::string_view text) const {
  require(is_valid_utf8(text), ErrorCode::kInvalidInput, "text is not valid UTF-8");
  const auto words = split_words(text);
  require(!words.empty(), ErrorCode::kEmptyInput, "no words in input text");

  TokenizedText out;
  out.text = std::string(text);
  auto push_special = [&](TokenId id, std::size_t at) {
    out.token_ids.push_back(id);
    out.offsets.push_back({at, at});
    out.word_ids.push_back(std::nullopt);
    out.special_mask.push_back(true);
  };
  if (framing_.add_cls) push_special(*cls_, 0);

  for (std::size_t w = 0; w < words.size(); ++w) {
    const Span span = words[w];
    const std::string word = lowercase_ ? lower_ascii(text.substr(span.begin, span.end - span.begin))
                                        : std::string(text.substr(span.begin, span.end - span.begin));
    std::vector<std::pair<TokenId, Span>> pieces;
    std::size_t start = 0;
    bool ok = true;
    while (start < word.size()) {
      std::size_t end = word.size();
      std::optional<TokenId> match;
      while (end > start) {
        std::string piece = word.substr(start, end - start);
        if (start > 0) piece = "##" + piece;
        if (auto id = find(piece); id && !is_special(*id)) {
          match = id;
          break;
        }
        --end;
      }
      if (!match) {
        ok = false;
        break;
      }
      pieces.emplace_back(*match, Span{span.begin + start, span.begin + end});
      start = end;
    }
    if (!ok) pieces.assign(1, {*unk_, span});
    for (const auto& [id, sp] : pieces) {
      out.token_ids.push_back(id);
      out.offsets.push_back(sp);
      out.word_ids.push_back(static_cast<int>(w));
      out.special_mask.push_back(false);
    }
  }

  if (framing_.add_sep) push_special(*sep_, text.size());
  return out;
}

std::vector<std::string> builtin_vocabulary() {
  static const char* const kWords[] = {
      "the", "a", "an", "this", "that", "these", "was", "is", "are", "were", "be", "been", "it", "its",
      "of", "in", "on", "at", "to", "for", "with", "and", "or", "but", "not", "no", "very", "so", "as",
      "by", "from", "he", "she", "they", "we", "you", "i", "my", "our", "their", "his", "her", "has",
      "have", "had", "will", "would", "can", "could",
      // sentiment
      "great", "good", "excellent", "wonderful", "amazing", "love", "loved", "best", "nice", "fun",
      "bad", "terrible", "awful", "boring", "worst", "hate", "poor", "fine", "dull", "happy", "sad",
      // reviews
      "movie", "film", "story", "actor", "acting", "plot", "scene", "music", "ending", "review", "show",
      // topics
      "sports", "game", "match", "team", "goal", "player", "season", "coach", "win", "won", "league",
      "score", "cup", "football", "business", "market", "stock", "company", "price", "shares",
      "profit", "bank", "trade", "deal", "economy", "sales", "oil", "science", "research", "study",
      "space", "computer", "software", "data", "internet", "technology", "scientists", "new", "model",
      "world", "government", "president", "war", "country", "people", "police", "city", "election",
      "minister", "talks", "peace", "news", "home", "conference", "workshop", "paper", "present",
      "presented", "accepted", "talk", "work",
      // misc
      "today", "year", "years", "week", "day", "time", "first", "last", "two", "three", "one", "after",
      "before", "over", "up", "out", "about", "more", "than", "said", "long", "short", "big", "small",
      "high", "low",
      // continuation pieces
      "##ing", "##ed", "##s", "##ly", "##er", "##est", "##shop", "##ment", "##tion", "##al", "##es",
      "##en", "##ness"};

  std::vector<std::string> vocab = {std::string(Tokenizer::kPad), std::string(Tokenizer::kCls),
                                    std::string(Tokenizer::kSep), std::string(Tokenizer::kMask),
                                    std::string(Tokenizer::kUnk)};
  for (const char* w : kWords) vocab.emplace_back(w);
  for (char c : std::string_view(".,!?'-:;\"()")) vocab.emplace_back(1, c);
  for (char c = '0'; c <= '9'; ++c) vocab.emplace_back(1, c);
  for (char c = 'a'; c <= 'z'; ++c) vocab.emplace_back(1, c);
  for (char c = 'a'; c <= 'z'; ++c) vocab.push_back(std::string("##") + c);

  std::set<std::string> seen;
  std::vector<std::string> unique;
  for (auto& v : vocab) {
    if (seen.insert(v).second) unique.push_back(std::move(v));
  }
  return unique;
}

}  // namespace lexplain
