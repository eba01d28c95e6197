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

#include "lexplain/activations.hpp"

#include <cmath>

#include "../common/container.hpp"

namespace lexplain {

namespace {
constexpr detail::Magic kActivationMagic = {'L', 'X', 'A', 'C', 'T', '\0', '\0', '\1'};
}

std::string_view to_string(ActivationGranularity g) {
  switch (g) {
    case ActivationGranularity::kClsToken: return "cls_token";
    case ActivationGranularity::kAllTokens: return "all_tokens";
    case ActivationGranularity::kNonSpecialTokens: return "non_special_tokens";
    case ActivationGranularity::kWordMean: return "word_mean";
  }
  return "all_tokens";
}

ActivationGranularity parse_activation_granularity(std::string_view name) {
  for (auto g : {ActivationGranularity::kClsToken, ActivationGranularity::kAllTokens,
                 ActivationGranularity::kNonSpecialTokens, ActivationGranularity::kWordMean}) {
    if (to_string(g) == name) return g;
  }
  fail(ErrorCode::kInvalidConfig, "unknown activation granularity '" + std::string(name) + "'");
}

Mat select_rows(const Mat& acts, const TokenizedText& tok, ActivationGranularity granularity,
                std::vector<std::size_t>* units) {
  require(static_cast<std::size_t>(acts.rows()) == tok.size(), ErrorCode::kDimensionMismatch,
          "activation rows do not match token count");
  std::vector<std::size_t> picked;
  Mat out;
  switch (granularity) {
    case ActivationGranularity::kClsToken:
      require(tok.size() > 0 && tok.special_mask[0], ErrorCode::kMissingClsToken,
              "first token is not a special [CLS]-style token");
      out = acts.topRows(1);
      picked.push_back(0);
      break;
    case ActivationGranularity::kAllTokens:
      out = acts;
      for (std::size_t t = 0; t < tok.size(); ++t) picked.push_back(t);
      break;
    case ActivationGranularity::kNonSpecialTokens: {
      out.resize(static_cast<Eigen::Index>(tok.num_non_special()), acts.cols());
      Eigen::Index r = 0;
      for (std::size_t t = 0; t < tok.size(); ++t) {
        if (tok.special_mask[t]) continue;
        out.row(r) = acts.row(static_cast<Eigen::Index>(t));
        picked.push_back(static_cast<std::size_t>(r));
        ++r;
      }
      break;
    }
    case ActivationGranularity::kWordMean: {
      const int n_words = tok.num_words();
      out = Mat::Zero(n_words, acts.cols());
      std::vector<int> counts(static_cast<std::size_t>(n_words), 0);
      for (std::size_t t = 0; t < tok.size(); ++t) {
        if (!tok.word_ids[t]) continue;
        out.row(*tok.word_ids[t]) += acts.row(static_cast<Eigen::Index>(t));
        ++counts[static_cast<std::size_t>(*tok.word_ids[t])];
      }
      for (int w = 0; w < n_words; ++w) {
        out.row(w) /= static_cast<double>(counts[static_cast<std::size_t>(w)]);
        picked.push_back(static_cast<std::size_t>(w));
      }
      break;
    }
  }
  if (units != nullptr) *units = std::move(picked);
  return out;
}

ActivationBundle collect_activations(const SplitModel& split, const Tokenizer& tokenizer,
                                     const std::vector<std::string>& texts, ActivationGranularity granularity) {
  require(!texts.empty(), ErrorCode::kEmptyInput, "no texts to collect activations from");
  std::vector<Mat> parts(texts.size());
  std::vector<std::vector<std::size_t>> units(texts.size());
  // Tokenization and validation happen up front so errors surface serially.
  std::vector<TokenizedText> toks;
  toks.reserve(texts.size());
  for (const auto& t : texts) toks.push_back(tokenizer.encode(t));
  if (granularity == ActivationGranularity::kClsToken) {
    for (const auto& tok : toks) {
      require(tok.special_mask[0], ErrorCode::kMissingClsToken, "first token is not a special [CLS]-style token");
    }
  }

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(texts.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    parts[k] = select_rows(split.extract(toks[k].token_ids), toks[k], granularity, &units[k]);
  }

  ActivationBundle bundle;
  bundle.granularity = granularity;
  bundle.split_point = split.split_point();
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.rows();
  const Eigen::Index width = parts.front().cols();
  bundle.matrix.resize(total, width);
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < parts.size(); ++s) {
    bundle.matrix.middleRows(row, parts[s].rows()) = parts[s].cast<float>();
    row += parts[s].rows();
    for (std::size_t u : units[s]) bundle.provenance.push_back({s, u});
  }
  return bundle;
}

std::string unit_text(const TokenizedText& tok, const Tokenizer& tokenizer, ActivationGranularity granularity,
                      std::size_t unit) {
  auto word_string = [&](int word) {
    std::size_t begin = tok.text.size(), end = 0;
    for (std::size_t t = 0; t < tok.size(); ++t) {
      if (tok.word_ids[t] && *tok.word_ids[t] == word) {
        begin = std::min(begin, tok.offsets[t].begin);
        end = std::max(end, tok.offsets[t].end);
      }
    }
    return begin < end ? tok.text.substr(begin, end - begin) : std::string();
  };
  switch (granularity) {
    case ActivationGranularity::kClsToken:
      return tok.text;
    case ActivationGranularity::kAllTokens: {
      require(unit < tok.size(), ErrorCode::kInvalidInput, "provenance token index out of range");
      if (tok.special_mask[unit]) return tokenizer.token(tok.token_ids[unit]);
      return word_string(*tok.word_ids[unit]);
    }
    case ActivationGranularity::kNonSpecialTokens: {
      std::size_t seen = 0;
      for (std::size_t t = 0; t < tok.size(); ++t) {
        if (tok.special_mask[t]) continue;
        if (seen++ == unit) return word_string(*tok.word_ids[t]);
      }
      fail(ErrorCode::kInvalidInput, "provenance token index out of range");
    }
    case ActivationGranularity::kWordMean:
      require(static_cast<int>(unit) < tok.num_words(), ErrorCode::kInvalidInput, "provenance word index out of range");
      return word_string(static_cast<int>(unit));
  }
  return {};
}

void save_activations(const ActivationBundle& bundle, const std::filesystem::path& path) {
  require(bundle.provenance.size() == bundle.rows(), ErrorCode::kInvalidActivations,
          "provenance length differs from row count");
  nlohmann::ordered_json header;
  header["shape"] = {bundle.rows(), bundle.width()};
  header["granularity"] = to_string(bundle.granularity);
  header["split_point"] = bundle.split_point;
  auto prov = nlohmann::ordered_json::array();
  for (const auto& p : bundle.provenance) prov.push_back({p.sample, p.unit});
  header["provenance"] = std::move(prov);
  std::vector<float> payload(bundle.matrix.data(), bundle.matrix.data() + bundle.matrix.size());
  detail::write_container(path, kActivationMagic, header, payload);
}

ActivationBundle load_activations(const std::filesystem::path& path) {
  auto c = detail::read_container(path, kActivationMagic, "activation cache");
  ActivationBundle b;
  try {
    const auto rows = c.header.at("shape").at(0).get<Eigen::Index>();
    const auto cols = c.header.at("shape").at(1).get<Eigen::Index>();
    require(static_cast<std::size_t>(rows * cols) == c.payload.size(), ErrorCode::kFormat,
            "activation payload size does not match header shape");
    b.matrix = Eigen::Map<const MatF>(c.payload.data(), rows, cols);
    b.granularity = parse_activation_granularity(c.header.at("granularity").get<std::string>());
    b.split_point = c.header.at("split_point").get<std::string>();
    for (const auto& p : c.header.at("provenance")) {
      b.provenance.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed activation header: ") + e.what());
  }
  require(b.provenance.size() == b.rows(), ErrorCode::kFormat, "provenance length differs from row count");
  return b;
}

}  // namespace lexplain
