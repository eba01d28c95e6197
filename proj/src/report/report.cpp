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

#include "lexplain/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/container.hpp"

namespace lexplain {

Json to_json(const Target& t) {
  Json j;
  if (t.kind == Target::Kind::kClassIndex) {
    j["kind"] = "class_index";
    j["class_index"] = t.class_index.value_or(-1);
  } else {
    j["kind"] = "generated_token";
    j["output_position"] = t.output_position.value_or(-1);
    if (t.token_id) j["token_id"] = *t.token_id;
    if (!t.token.empty()) j["token"] = t.token;
  }
  return j;
}

Target target_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "class_index") return Target::for_class(j.at("class_index").get<int>());
  require(kind == "generated_token", ErrorCode::kFormat, "unknown target kind '" + kind + "'");
  Target t = Target::for_position(j.at("output_position").get<int>());
  if (j.contains("token_id")) t.token_id = j["token_id"].get<TokenId>();
  t.token = j.value("token", std::string());
  return t;
}

Json to_json(const AttributionResult& r) {
  Json j;
  j["method"] = r.method;
  j["granularity"] = to_string(r.granularity);
  j["inference_mode"] = to_string(r.inference_mode);
  j["target"] = to_json(r.target);
  j["units"] = r.units;
  j["scores"] = r.scores;
  Json notes = Json::object();
  for (const auto& [k, v] : r.diagnostics.notes) notes[k] = v;
  j["diagnostics"] = {{"n_model_calls", r.diagnostics.n_model_calls},
                      {"seed", r.diagnostics.seed},
                      {"warnings", r.diagnostics.warnings},
                      {"notes", std::move(notes)}};
  return j;
}

AttributionResult attribution_from_json(const nlohmann::json& j) {
  AttributionResult r;
  r.method = j.at("method").get<std::string>();
  r.granularity = parse_granularity(j.at("granularity").get<std::string>());
  r.inference_mode = parse_inference_mode(j.at("inference_mode").get<std::string>());
  r.target = target_from_json(j.at("target"));
  r.units = j.at("units").get<std::vector<std::string>>();
  r.scores = j.at("scores").get<std::vector<double>>();
  require(r.units.size() == r.scores.size(), ErrorCode::kFormat, "result units and scores differ in length");
  const auto& d = j.at("diagnostics");
  r.diagnostics.n_model_calls = d.at("n_model_calls").get<std::size_t>();
  r.diagnostics.seed = d.at("seed").get<std::uint64_t>();
  r.diagnostics.warnings = d.at("warnings").get<std::vector<std::string>>();
  r.diagnostics.notes = d.at("notes").get<std::map<std::string, std::string>>();
  return r;
}

Json to_json(const Explanation& e) {
  Json j;
  j["text"] = e.text;
  j["generated_ids"] = e.generated;
  j["generated_tokens"] = e.generated_tokens;
  Json results = Json::array();
  for (const auto& r : e.results) results.push_back(to_json(r));
  j["results"] = std::move(results);
  return j;
}

Json to_json(const FaithfulnessCurve& c, std::string_view metric) {
  Json j;
  j["metric"] = metric;
  j["fractions"] = c.fractions;
  j["scores"] = c.scores;
  j["auc"] = c.auc;
  return j;
}

Json to_json(const AopcResult& a, AopcVariant variant) {
  Json j;
  j["metric"] = "aopc";
  j["variant"] = to_string(variant);
  j["ks"] = a.ks;
  j["drops"] = a.drops;
  j["value"] = a.value;
  return j;
}

Json to_json(const ConceptInterpretation& i) {
  Json j;
  j["concept_id"] = i.concept_id;
  j["method"] = to_string(i.method);
  Json evidence = Json::array();
  for (const auto& [text, value] : i.evidence) evidence.push_back({{"text", text}, {"value", value}});
  j["evidence"] = std::move(evidence);
  if (i.label) j["label"] = *i.label;
  if (!i.warnings.empty()) j["warnings"] = i.warnings;
  return j;
}

Json to_json(const ConceptImportance& i) {
  Json j;
  j["concept_id"] = i.concept_id;
  j["value"] = i.value;
  j["estimator"] = to_string(i.estimator);
  j["target"] = to_json(i.target);
  return j;
}

// ---------------------------------------------------------------------------

ExplanationReport::ExplanationReport() {
  doc_["version"] = kReportVersion;
  doc_["runs"] = Json::array();
  doc_["timing"] = Json::object();
}

ExplanationReport::ExplanationReport(Json doc) : doc_(std::move(doc)) {
  require(doc_.is_object() && doc_.contains("version") && doc_["version"].is_string(), ErrorCode::kFormat,
          "report has no version string");
  require(doc_.contains("runs") && doc_["runs"].is_array(), ErrorCode::kFormat, "report has no runs array");
  if (!doc_.contains("timing")) doc_["timing"] = Json::object();
}

std::string ExplanationReport::dump() const { return doc_.dump(2) + "\n"; }

ExplanationReport ExplanationReport::parse(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kFormat, std::string("report is not valid JSON: ") + e.what());
  }
  return ExplanationReport(std::move(doc));
}

ExplanationReport ExplanationReport::load(const std::filesystem::path& path) { return parse(detail::read_text(path)); }

void ExplanationReport::save(const std::filesystem::path& path) const { detail::write_text_atomic(path, dump()); }

// ---------------------------------------------------------------------------

std::string_view heat_class(double score, double max_abs) {
  if (!(max_abs > 0.0)) return "neutral";
  const double n = score / max_abs;
  if (n < -1.0 / 3.0) return "cold";
  if (n > 1.0 / 3.0) return "warm";
  return "neutral";
}

namespace {

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

// JSON safe to place inside a <script> element.
std::string script_json(const Json& j) {
  std::string out;
  for (char c : j.dump()) {
    if (c == '<') {
      out += "\\u003c";
    } else {
      out += c;
    }
  }
  return out;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string render_units(const std::vector<std::string>& units, const std::vector<double>& scores) {
  std::ostringstream out;
  const double m = max_abs(scores);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const double s = i < scores.size() ? scores[i] : 0.0;
    const double alpha = m > 0.0 ? std::abs(s) / m : 0.0;
    out << "<span class=\"unit " << heat_class(s, m) << "\" style=\"--a:" << alpha << "\" title=\"" << s << "\">"
        << escape_html(units[i]) << "</span> ";
  }
  return out.str();
}

std::string target_label(const nlohmann::ordered_json& target) {
  if (target.value("kind", "") == "class_index") return "class " + std::to_string(target.value("class_index", -1));
  return target.value("token", "#" + std::to_string(target.value("output_position", -1)));
}

constexpr std::string_view kStyle = R"(
body { font-family: sans-serif; margin: 2em; color: #222; }
.input { margin-bottom: 2em; padding: 1em; border: 1px solid #ddd; border-radius: 6px; }
.meta { color: #666; font-size: 0.85em; margin-bottom: 0.5em; }
.unit { padding: 2px 3px; border-radius: 3px; line-height: 2; }
.unit.warm { background: rgba(220, 60, 40, calc(0.15 + 0.6 * var(--a))); }
.unit.cold { background: rgba(40, 90, 220, calc(0.15 + 0.6 * var(--a))); }
.unit.neutral { background: rgba(200, 200, 200, calc(0.1 + 0.3 * var(--a))); }
.out-token { cursor: pointer; padding: 2px 5px; margin: 0 2px; border: 1px solid #aaa; border-radius: 3px; }
.out-token.selected { background: #333; color: #fff; }
pre { background: #f6f6f6; padding: 1em; overflow-x: auto; }
)";

constexpr std::string_view kScript = R"(
(function () {
  var data = JSON.parse(document.getElementById("lexplain-data").textContent);
  function heat(s, m) {
    if (!(m > 0)) return "neutral";
    var n = s / m;
    return n < -1 / 3 ? "cold" : (n > 1 / 3 ? "warm" : "neutral");
  }
  function render(i, r) {
    var input = data[i], map = input.maps[r], box = document.getElementById("units-" + i);
    var m = 0;
    map.scores.forEach(function (s) { m = Math.max(m, Math.abs(s)); });
    box.textContent = "";
    input.units.forEach(function (u, k) {
      var s = map.scores[k], span = document.createElement("span");
      span.className = "unit " + heat(s, m);
      span.style.setProperty("--a", m > 0 ? Math.abs(s) / m : 0);
      span.title = String(s);
      span.textContent = u;
      box.appendChild(span);
      box.appendChild(document.createTextNode(" "));
    });
    document.getElementById("target-" + i).textContent = map.target;
    document.querySelectorAll(".out-token[data-input='" + i + "']").forEach(function (el) {
      el.classList.toggle("selected", Number(el.dataset.result) === r);
    });
  }
  document.querySelectorAll(".out-token").forEach(function (el) {
    el.addEventListener("click", function () { render(Number(el.dataset.input), Number(el.dataset.result)); });
  });
})();
)";

}  // namespace

std::string render_html(const ExplanationReport& report) {
  std::ostringstream body;
  Json data = Json::array();
  std::size_t input_index = 0;
  for (const auto& run : report.runs()) {
    const std::string kind = run.value("kind", "");
    if (kind != "attribution") {
      body << "<div class=\"input\"><div class=\"meta\">" << escape_html(kind) << " run</div><pre>"
           << escape_html(run.dump(2)) << "</pre></div>\n";
      continue;
    }
    const auto& cfg = run.contains("config") ? run["config"] : Json::object();
    for (const auto& input : run.value("inputs", Json::array())) {
      const auto& results = input.at("results");
      Json maps = Json::array();
      for (const auto& r : results) maps.push_back({{"target", target_label(r.at("target"))}, {"scores", r.at("scores")}});
      const auto units = results.empty() ? std::vector<std::string>{} : results[0].at("units").get<std::vector<std::string>>();
      data.push_back({{"units", units}, {"maps", maps}});

      const auto i = input_index++;
      body << "<div class=\"input\">\n<div class=\"meta\">" << escape_html(cfg.value("model", "")) << " &middot; "
           << escape_html(cfg.value("method", "")) << " &middot; target: <span id=\"target-" << i << "\">"
           << (results.empty() ? "" : escape_html(target_label(results[0].at("target")))) << "</span></div>\n";
      body << "<div class=\"text\">" << escape_html(input.value("text", "")) << "</div>\n";
      const auto generated = input.value("generated_tokens", std::vector<std::string>{});
      if (!generated.empty()) {
        body << "<div class=\"outputs\">output:";
        for (std::size_t r = 0; r < results.size(); ++r) {
          body << " <span class=\"out-token" << (r == 0 ? " selected" : "") << "\" data-input=\"" << i
               << "\" data-result=\"" << r << "\">" << escape_html(target_label(results[r].at("target")))
               << "</span>";
        }
        body << "</div>\n";
      }
      body << "<p id=\"units-" << i << "\">";
      if (!results.empty())
        body << render_units(units, results[0].at("scores").get<std::vector<double>>());
      body << "</p>\n</div>\n";
    }
  }

  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>lexplain report</title>\n<style>"
      << kStyle << "</style>\n</head>\n<body>\n<h1>Attribution report</h1>\n"
      << "<div class=\"meta\">report version " << escape_html(report.json().value("version", "")) << "</div>\n"
      << body.str() << "<script type=\"application/json\" id=\"lexplain-data\">" << script_json(data)
      << "</script>\n<script>" << kScript << "</script>\n</body>\n</html>\n";
  return out.str();
}

void emit_html(const ExplanationReport& report, const std::filesystem::path& path) {
  detail::write_text_atomic(path, render_html(report));
}

}  // namespace lexplain
