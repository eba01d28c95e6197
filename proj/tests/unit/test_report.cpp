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

#include <gtest/gtest.h>

#include <regex>

#include "lexplain/report.hpp"
#include "support.hpp"

namespace lx = lexplain;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

lx::ExplanationReport generation_report() {
  lx::ExplainerConfig cfg;
  cfg.method = "occlusion";
  cfg.max_new_tokens = 3;
  lx::AttributionExplainer ex(lx::make_tiny_transformer(lx::Task::kGeneration), lxtest::gen_tokenizer(), cfg);
  lx::ExplanationReport report;
  lx::Json run;
  run["kind"] = "attribution";
  run["inputs"] = lx::Json::array({lx::to_json(ex.explain("the team won the"))});
  report.runs().push_back(run);
  return report;
}

}  // namespace

TEST(Report, AttributionRoundTrip) {
  lx::ExplainerConfig cfg;
  cfg.method = "kernelshap";
  lx::AttributionExplainer ex(lxtest::bow({{"great", 2.0}}), lxtest::cls_tokenizer(), cfg);
  const auto r = ex.explain("great movie").results[0];
  const auto back = lx::attribution_from_json(nlohmann::json::parse(lx::to_json(r).dump()));
  EXPECT_EQ(back.scores, r.scores);
  EXPECT_EQ(back.units, r.units);
  EXPECT_EQ(back.target.class_index, r.target.class_index);
  EXPECT_EQ(back.method, r.method);
  EXPECT_EQ(back.diagnostics.n_model_calls, r.diagnostics.n_model_calls);
}

TEST(Report, DumpParseDump) {
  const auto report = generation_report();
  const auto text = report.dump();
  EXPECT_EQ(lx::ExplanationReport::parse(text).dump(), text);
  EXPECT_EQ(report.json().at("version"), std::string(lx::kReportVersion));
}

TEST(Report, SaveLoad) {
  const auto report = generation_report();
  const auto path = std::filesystem::temp_directory_path() / "lexplain_report_roundtrip.json";
  report.save(path);
  EXPECT_EQ(lx::ExplanationReport::load(path).dump(), report.dump());
  std::filesystem::remove(path);
}

TEST(Html, GenerationTokensAndArrays) {
  const auto html = lx::render_html(generation_report());
  EXPECT_EQ(count(html, "class=\"out-token"), 3u);
  const auto start = html.find("id=\"lexplain-data\">");
  ASSERT_NE(start, std::string::npos);
  const auto end = html.find("</script>", start);
  const auto data = nlohmann::json::parse(html.substr(start + 19, end - start - 19));
  ASSERT_EQ(data.size(), 1u);
  EXPECT_EQ(data[0].at("maps").size(), 3u);
  for (const auto& m : data[0].at("maps")) EXPECT_EQ(m.at("scores").size(), 4u);
}

TEST(Html, NoExternalReferences) {
  const auto html = lx::render_html(generation_report());
  EXPECT_EQ(html.find("://"), std::string::npos);
  EXPECT_EQ(html.find("src="), std::string::npos);
  EXPECT_EQ(html.find("href="), std::string::npos);
  EXPECT_EQ(html.find("@import"), std::string::npos);
}

TEST(Html, EscapesText) {
  lx::ExplainerConfig cfg;
  cfg.method = "occlusion";
  lx::AttributionExplainer ex(lxtest::bow({{"great", 2.0}}), lxtest::cls_tokenizer(), cfg);
  lx::ExplanationReport report;
  lx::Json run;
  run["kind"] = "attribution";
  run["inputs"] = lx::Json::array({lx::to_json(ex.explain("great </script> movie"))});
  report.runs().push_back(run);
  const auto html = lx::render_html(report);
  EXPECT_EQ(count(html, "</script>"), count(html, "<script"));
}

TEST(Html, HeatClasses) {
  EXPECT_EQ(lx::heat_class(-1.0, 1.0), "cold");
  EXPECT_EQ(lx::heat_class(0.0, 1.0), "neutral");
  EXPECT_EQ(lx::heat_class(0.9, 1.0), "warm");
  EXPECT_EQ(lx::heat_class(0.3, 1.0), "neutral");
  EXPECT_EQ(lx::heat_class(5.0, 0.0), "neutral");
}
