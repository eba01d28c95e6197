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

#include <nlohmann/json.hpp>

#include "cli_runner.hpp"
#include "lexplain/concepts/analysis.hpp"
#include "lexplain/concepts/concept_model.hpp"

namespace lx = lexplain;
using lxtest::run_cli;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lexplain_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_corpus(const std::filesystem::path& p, std::size_t n) {
  std::ofstream out(p);
  for (const auto& doc : lx::synthetic_corpus(n, 0)) out << doc << "\n";
}

}  // namespace

TEST(Cli, LimeTopWordIsGreat) {
  const auto r = run_cli("attribute --model linear-bow --method lime --text 'great movie'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto doc = json::parse(r.out);
  const auto& res = doc["runs"][0]["inputs"][0]["results"][0];
  const auto& scores = res["scores"];
  const std::size_t top = scores[0].get<double>() >= scores[1].get<double>() ? 0 : 1;
  EXPECT_EQ(res["units"][top], "great");
}

TEST(Cli, UnknownMethodExitsTwo) {
  const auto r = run_cli("attribute --model linear-bow --method nosuch --text 'great movie'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("nosuch"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, GenerationThreeResults) {
  const auto r = run_cli("attribute --model tiny-gen --method occlusion --max-new-tokens 3 --text 'the team won'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["runs"][0]["inputs"][0]["results"].size(), 3u);
}

TEST(Cli, MalformedConfigNamesKey) {
  const auto dir = scratch("badcfg");
  {
    std::ofstream(dir / "cfg.json") << R"({"method": "lime", "perturbation": {"n_samples": "many"}})";
  }
  const auto r = run_cli("attribute --model linear-bow --text 'great movie' --config '" + (dir / "cfg.json").string() + "'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("n_samples"), std::string::npos);
}

TEST(Cli, UnknownConfigKey) {
  const auto dir = scratch("unkcfg");
  {
    std::ofstream(dir / "cfg.json") << R"({"methd": "lime"})";
  }
  const auto r = run_cli("attribute --model linear-bow --text 'great movie' --config '" + (dir / "cfg.json").string() + "'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("methd"), std::string::npos);
}

TEST(Cli, SeedPrecedence) {
  const auto dir = scratch("seed");
  {
    std::ofstream(dir / "cfg.json") << R"({"seed": 5})";
  }
  const std::string base = "attribute --model linear-bow --method lime --n-samples 50 --text 'the plot was great and the "
                           "acting was good and the music was fine' --config '" + (dir / "cfg.json").string() + "'";
  auto seed_of = [](const lxtest::CliResult& r) {
    return json::parse(r.out)["runs"][0]["inputs"][0]["results"][0]["diagnostics"]["seed"].get<int>();
  };
  EXPECT_EQ(seed_of(run_cli(base)), 5);
  EXPECT_EQ(seed_of(run_cli(base, "LEXPLAIN_SEED=9")), 9);
  EXPECT_EQ(seed_of(run_cli(base + " --seed 11", "LEXPLAIN_SEED=9")), 11);
}

TEST(Cli, DeterministicOutput) {
  const std::string args = "attribute --model tiny-cls --method kernelshap --n-samples 64 --text 'a wonderful story'";
  EXPECT_EQ(run_cli(args).out, run_cli(args).out);
}

TEST(Cli, EvaluateAppendsMetrics) {
  const auto dir = scratch("evaluate");
  const auto report = (dir / "r.json").string();
  ASSERT_EQ(run_cli("attribute --model linear-bow --method occlusion --text 'great bad movie' --out '" + report + "'")
                .exit_code,
            0);
  const auto r = run_cli("evaluate --report '" + report + "' --metric deletion --metric aopc_comprehensiveness");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto metrics = json::parse(r.out)["runs"][0]["inputs"][0]["results"][0]["metrics"];
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics[0]["metric"], "deletion");
}

TEST(Cli, HtmlReport) {
  const auto dir = scratch("html");
  const auto report = (dir / "r.json").string();
  const auto html = (dir / "r.html").string();
  ASSERT_EQ(run_cli("attribute --model tiny-gen --method occlusion --max-new-tokens 3 --text 'the game' --out '" +
                    report + "'")
                .exit_code,
            0);
  ASSERT_EQ(run_cli("report --in '" + report + "' --out '" + html + "'").exit_code, 0);
  const auto page = lxtest::slurp(html);
  EXPECT_EQ(page.find("://"), std::string::npos);
  EXPECT_NE(page.find("out-token"), std::string::npos);
}

TEST(Cli, UnwritablePathExitsThree) {
  const auto r = run_cli("attribute --model linear-bow --method occlusion --text 'great' --out /nonexistent_dir/x.json");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, CorruptModelFile) {
  const auto dir = scratch("corrupt");
  {
    std::ofstream(dir / "m.lxc") << "garbage bytes";
  }
  const auto r = run_cli("concepts metrics --model-file '" + (dir / "m.lxc").string() + "'");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("unrecognized concept model file"), std::string::npos);
}

TEST(Cli, PcaFitHeader) {
  const auto dir = scratch("pcafit");
  write_corpus(dir / "corpus.txt", 100);
  const auto model = (dir / "pca.lxc").string();
  const auto r = run_cli("concepts fit --corpus '" + (dir / "corpus.txt").string() +
                         "' --model tiny-gen --split-point layer_1 --kind pca --c 8 --out '" + model + "'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto m = lx::ConceptModel::load(model);
  EXPECT_EQ(m.kind(), lx::ConceptKind::kPca);
  EXPECT_EQ(m.concepts(), 8u);
  EXPECT_EQ(m.source.at("split_point"), "layer_1");
}

TEST(Cli, PlantedPipelineLabelsSports) {
  const auto dir = scratch("planted");
  write_corpus(dir / "corpus.txt", 60);
  const auto corpus = (dir / "corpus.txt").string();
  const auto model = (dir / "n.lxc").string();
  ASSERT_EQ(run_cli("concepts fit --corpus '" + corpus + "' --model linear-bow --split-point embeddings "
                    "--granularity non_special_tokens --kind neurons --out '" + model + "'")
                .exit_code,
            0);
  const auto r = run_cli("concepts interpret --model-file '" + model + "' --corpus '" + corpus +
                         "' --method llm_label --concept 1");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto interp = json::parse(r.out)["runs"][0]["interpretations"][0];
  EXPECT_EQ(interp["evidence"][0]["text"], "sports");
  EXPECT_EQ(interp["label"].get<std::string>().rfind("sports", 0), 0u);
  const auto imp = run_cli("concepts importance --model-file '" + model + "' --text 'the sports match'");
  ASSERT_EQ(imp.exit_code, 0) << imp.err;
}
