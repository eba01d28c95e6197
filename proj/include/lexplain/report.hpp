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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexplain/attribution/explainer.hpp"
#include "lexplain/attribution/metrics.hpp"
#include "lexplain/concepts/analysis.hpp"

namespace lexplain {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kReportVersion = "1.0";

// JSON forms of the library results. Keys are emitted in a fixed order so
// that a fixed config and seed give byte-identical files.
Json to_json(const Target& t);
Target target_from_json(const nlohmann::json& j);
Json to_json(const AttributionResult& r);
AttributionResult attribution_from_json(const nlohmann::json& j);
/// {text, tokens, generated_ids, generated_tokens, results}
Json to_json(const Explanation& e);
Json to_json(const FaithfulnessCurve& c, std::string_view metric);
Json to_json(const AopcResult& a, AopcVariant variant);
Json to_json(const ConceptInterpretation& i);
Json to_json(const ConceptImportance& i);

/// {version, runs, timing}. Each run is {kind, config, ...} where kind is
/// "attribution" or "concepts".
class ExplanationReport {
 public:
  ExplanationReport();
  explicit ExplanationReport(Json doc);

  Json& runs() { return doc_["runs"]; }
  const Json& runs() const { return doc_["runs"]; }
  Json& timing() { return doc_["timing"]; }
  const Json& json() const { return doc_; }

  /// Pretty-printed JSON followed by a newline.
  std::string dump() const;
  static ExplanationReport parse(const std::string& text);
  static ExplanationReport load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  Json doc_;
};

/// Heat class for a score under symmetric normalization by `max_abs`:
/// "cold" below -1/3, "warm" above +1/3, "neutral" otherwise.
std::string_view heat_class(double score, double max_abs);

/// Self-contained HTML page: inline data and script, no external references.
/// Generation runs list the output tokens; clicking one shows its map.
std::string render_html(const ExplanationReport& report);
void emit_html(const ExplanationReport& report, const std::filesystem::path& path);

}  // namespace lexplain
