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

// lexplain command-line front end.
//
//   lexplain attribute   --model linear-bow --method lime --text "great movie"
//   lexplain evaluate    --report report.json
//   lexplain concepts fit|interpret|importance|metrics ...
//   lexplain report      --in report.json --out report.html
//
// Every subcommand also reads a JSON config file (--config); flags override
// it, and LEXPLAIN_SEED overrides the config seed. Exit codes: 0 success,
// 2 configuration error, 3 runtime error.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lexplain/activations.hpp"
#include "lexplain/attribution/explainer.hpp"
#include "lexplain/attribution/metrics.hpp"
#include "lexplain/concepts/analysis.hpp"
#include "lexplain/concepts/concept_model.hpp"
#include "lexplain/report.hpp"

namespace lx = lexplain;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config access with key-naming errors.

class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError("config key '" + name("") + "' must be an object");
  }

  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

  void allow(const std::set<std::string>& keys) const {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!keys.count(k)) throw ConfigError("unknown config key '" + name(k) + "'");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name(key) + "' has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing config key '" + name(key) + "'");
    return get<T>(key, T{});
  }

  Section sub(const std::string& key) const {
    static const json kNull;
    return Section(has(key) ? j_.at(key) : kNull, name(key));
  }

 private:
  const json& j_;
  std::string prefix_;
};

// Runs `f`, turning library config errors into errors that name `key`.
template <class F>
auto keyed(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const lx::Error& e) {
    if (e.code() == lx::ErrorCode::kInvalidConfig || e.code() == lx::ErrorCode::kUnknownMethod ||
        e.code() == lx::ErrorCode::kUnknownSplitPoint)
      throw ConfigError("config key '" + key + "': " + e.what());
    throw;
  }
}

void set_path(json& root, const std::string& dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  for (std::size_t dot; (dot = dotted.find('.', start)) != std::string::npos; start = dot + 1) {
    json& child = (*node)[dotted.substr(start, dot - start)];
    if (!child.is_object()) child = json::object();
    node = &child;
  }
  (*node)[dotted.substr(start)] = std::move(value);
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config file '" + path + "' is not a JSON object");
  return j;
}

void apply_env_seed(json& cfg) {
  const char* env = std::getenv("LEXPLAIN_SEED");
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const unsigned long long seed = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    cfg["seed"] = seed;
  } catch (const std::exception&) {
    throw ConfigError("LEXPLAIN_SEED must be a nonnegative integer, got '" + std::string(env) + "'");
  }
}

// Flag overlay: records a flag's value in the config when it was given.
struct Overlay {
  struct Entry {
    CLI::Option* option;
    std::string key;
    std::function<json()> value;
  };
  std::vector<Entry> entries;

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, T& target, const std::string& help) {
    CLI::Option* o = app->add_option(flag, target, help);
    entries.push_back({o, key, [&target] { return json(target); }});
    return o;
  }
  CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& key, bool& target,
                        const std::string& help) {
    CLI::Option* o = app->add_flag(flag, target, help);
    entries.push_back({o, key, [&target] { return json(target); }});
    return o;
  }
  void apply(json& cfg) const {
    for (const auto& e : entries)
      if (e.option->count() > 0) set_path(cfg, e.key, e.value());
  }
};

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) lx::fail(lx::ErrorCode::kIo, "cannot read '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

void write_output(const lx::ExplanationReport& report, const std::string& path) {
  if (path.empty()) {
    std::cout << report.dump();
  } else {
    report.save(path);
  }
}

lx::LoadedModel load_model(const std::string& name) {
  return keyed("model", [&] { return lx::ModelRegistry::global().load(name); });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// attribute

struct AttributeFlags {
  std::string config, model, method, granularity, inference_mode, replacement, out, html, input_file, baseline, reduce;
  std::vector<std::string> texts;
  std::vector<int> targets;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 0, batch_size = 0, n_samples = 0, sobol_n = 0, ig_steps = 0, n_noise = 0;
  double kernel_width = 0, noise_std = 0;
  bool input_x_gradient = false, timing = false;
  Overlay overlay;
};

void add_attribute(CLI::App& app, AttributeFlags& f) {
  CLI::App* sub = app.add_subcommand("attribute", "Attribute model outputs to input units");
  sub->add_option("--config", f.config, "JSON config file");
  auto& o = f.overlay;
  o.add(sub, "--model", "model", f.model, "Registered model name");
  o.add(sub, "--method", "method", f.method, "Attribution method");
  o.add(sub, "--text", "texts", f.texts, "Input text (repeatable)");
  o.add(sub, "--input-file", "input_file", f.input_file, "File with one input per line");
  o.add(sub, "--target", "targets", f.targets, "Class index or output position (repeatable)");
  o.add(sub, "--granularity", "granularity", f.granularity, "token | word | sentence");
  o.add(sub, "--inference-mode", "inference_mode", f.inference_mode, "logits | softmax | log_softmax");
  o.add(sub, "--seed", "seed", f.seed, "Random seed");
  o.add(sub, "--max-new-tokens", "max_new_tokens", f.max_new_tokens, "Generated tokens to explain");
  o.add(sub, "--batch-size", "batch_size", f.batch_size, "Perturbed inputs per batch");
  o.add(sub, "--replacement", "perturbation.replacement", f.replacement, "mask_token | pad_token | delete");
  o.add(sub, "--n-samples", "perturbation.n_samples", f.n_samples, "LIME / KernelSHAP samples");
  o.add(sub, "--kernel-width", "perturbation.kernel_width", f.kernel_width, "LIME kernel width");
  o.add(sub, "--sobol-n", "perturbation.sobol_n", f.sobol_n, "Sobol base samples");
  o.add(sub, "--ig-steps", "gradient.ig_steps", f.ig_steps, "Integrated gradients steps");
  o.add(sub, "--noise-std", "gradient.noise_std", f.noise_std, "Relative noise level");
  o.add(sub, "--n-noise", "gradient.n_noise", f.n_noise, "Noisy samples");
  o.add(sub, "--baseline", "gradient.baseline", f.baseline, "pad_embedding | zero_embedding");
  o.add(sub, "--reduce", "gradient.reduce", f.reduce, "l2_norm | sum | mean");
  o.add_flag(sub, "--input-x-gradient,!--no-input-x-gradient", "gradient.input_x_gradient", f.input_x_gradient,
             "Multiply gradients by inputs");
  o.add(sub, "--out", "output.json", f.out, "Report JSON path (stdout when omitted)");
  o.add(sub, "--html", "output.html", f.html, "Also write an HTML report");
  o.add_flag(sub, "--timing", "timing", f.timing, "Record wall-clock seconds in the report");
}

lx::ExplainerConfig explainer_config(const Section& s, const lx::ModelAdapter& model) {
  lx::ExplainerConfig c;
  c.method = s.require<std::string>("method");
  c.granularity = keyed("granularity", [&] { return lx::parse_granularity(s.get<std::string>("granularity", "word")); });
  c.inference_mode =
      keyed("inference_mode", [&] { return lx::parse_inference_mode(s.get<std::string>("inference_mode", "logits")); });
  c.seed = s.get<std::uint64_t>("seed", 0);
  c.max_new_tokens = s.get<std::size_t>("max_new_tokens", c.max_new_tokens);
  c.batch_size = s.get<std::size_t>("batch_size", c.batch_size);
  if (c.batch_size == 0) throw ConfigError("config key 'batch_size' must be positive");

  const Section p = s.sub("perturbation");
  p.allow({"replacement", "n_samples", "kernel_width", "sobol_n", "max_enumeration"});
  c.perturbation.replacement =
      keyed(p.name("replacement"), [&] { return lx::parse_replacement(p.get<std::string>("replacement", "mask_token")); });
  c.perturbation.n_samples = p.get<std::size_t>("n_samples", c.perturbation.n_samples);
  c.perturbation.kernel_width = p.get<double>("kernel_width", c.perturbation.kernel_width);
  c.perturbation.sobol_n = p.get<std::size_t>("sobol_n", c.perturbation.sobol_n);
  c.perturbation.max_enumeration = p.get<std::size_t>("max_enumeration", c.perturbation.max_enumeration);
  keyed("perturbation", [&] { c.perturbation.validate(); return 0; });

  const Section g = s.sub("gradient");
  g.allow({"ig_steps", "noise_std", "n_noise", "baseline", "reduce", "input_x_gradient"});
  c.gradient.ig_steps = g.get<std::size_t>("ig_steps", c.gradient.ig_steps);
  c.gradient.noise_std = g.get<double>("noise_std", c.gradient.noise_std);
  c.gradient.n_noise = g.get<std::size_t>("n_noise", c.gradient.n_noise);
  c.gradient.baseline =
      keyed(g.name("baseline"), [&] { return lx::parse_baseline(g.get<std::string>("baseline", "pad_embedding")); });
  if (g.has("reduce"))
    c.gradient.reduce = keyed(g.name("reduce"), [&] { return lx::parse_embedding_reduce(g.get<std::string>("reduce", "")); });
  c.gradient.input_x_gradient = g.get<bool>("input_x_gradient", c.gradient.input_x_gradient);
  keyed("gradient", [&] { c.gradient.validate(); return 0; });
  (void)model;
  return c;
}

json echo_config(const std::string& model_name, const lx::ModelAdapter& model, const lx::ExplainerConfig& c) {
  json j;
  j["model"] = model_name;
  j["task"] = lx::to_string(model.task());
  j["method"] = c.method;
  j["granularity"] = lx::to_string(c.granularity);
  j["inference_mode"] = lx::to_string(c.inference_mode);
  j["seed"] = c.seed;
  j["max_new_tokens"] = c.max_new_tokens;
  j["batch_size"] = c.batch_size;
  j["perturbation"] = {{"replacement", lx::to_string(c.perturbation.replacement)},
                       {"n_samples", c.perturbation.n_samples},
                       {"kernel_width", c.perturbation.kernel_width},
                       {"sobol_n", c.perturbation.sobol_n},
                       {"max_enumeration", c.perturbation.max_enumeration}};
  j["gradient"] = {{"ig_steps", c.gradient.ig_steps},
                   {"noise_std", c.gradient.noise_std},
                   {"n_noise", c.gradient.n_noise},
                   {"baseline", lx::to_string(c.gradient.baseline)},
                   {"reduce", lx::to_string(c.gradient.effective_reduce())},
                   {"input_x_gradient", c.gradient.input_x_gradient}};
  return j;
}

int run_attribute(AttributeFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.overlay.apply(cfg);
  const Section s(cfg, "");
  s.allow({"model", "method", "texts", "input_file", "targets", "granularity", "inference_mode", "seed",
           "max_new_tokens", "batch_size", "perturbation", "gradient", "output", "timing"});
  const Section out = s.sub("output");
  out.allow({"json", "html"});

  const auto model_name = s.require<std::string>("model");
  const lx::LoadedModel loaded = load_model(model_name);
  const lx::ExplainerConfig ecfg = explainer_config(s, *loaded.model);
  auto texts = s.get<std::vector<std::string>>("texts", {});
  if (s.has("input_file")) {
    const auto more = read_lines(s.get<std::string>("input_file", ""));
    texts.insert(texts.end(), more.begin(), more.end());
  }
  if (texts.empty()) throw ConfigError("missing config key 'texts' (or --text / --input-file)");

  std::optional<std::vector<lx::Target>> targets;
  if (s.has("targets")) {
    targets.emplace();
    for (int t : s.get<std::vector<int>>("targets", {}))
      targets->push_back(loaded.model->task() == lx::Task::kClassification ? lx::Target::for_class(t)
                                                                             : lx::Target::for_position(t));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const lx::AttributionExplainer explainer =
      keyed("method", [&] { return lx::AttributionExplainer(loaded.model, loaded.tokenizer, ecfg); });
  json inputs = json::array();
  std::size_t calls = 0;
  for (const auto& text : texts) {
    const lx::Explanation e = explainer.explain(text, targets);
    for (const auto& r : e.results) calls += r.diagnostics.n_model_calls;
    inputs.push_back(lx::to_json(e));
  }

  lx::ExplanationReport report;
  lx::Json run;
  run["kind"] = "attribution";
  run["config"] = echo_config(model_name, *loaded.model, ecfg);
  run["inputs"] = std::move(inputs);
  report.runs().push_back(std::move(run));
  report.timing()["model_calls"] = calls;
  if (s.get<bool>("timing", false)) report.timing()["seconds"] = seconds_since(t0);

  write_output(report, out.get<std::string>("json", ""));
  if (out.has("html")) lx::emit_html(report, out.get<std::string>("html", ""));
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateFlags {
  std::string config, report, out;
  std::vector<std::string> metrics;
  std::vector<double> k_fractions;
  Overlay overlay;
};

void add_evaluate(CLI::App& app, EvaluateFlags& f) {
  CLI::App* sub = app.add_subcommand("evaluate", "Faithfulness metrics for a saved attribution report");
  sub->add_option("--config", f.config, "JSON config file");
  f.overlay.add(sub, "--report", "report", f.report, "Attribution report JSON");
  f.overlay.add(sub, "--metric", "metrics", f.metrics,
                "deletion | insertion | aopc_comprehensiveness | aopc_sufficiency (repeatable)");
  f.overlay.add(sub, "--k-fractions", "k_fractions", f.k_fractions, "AOPC fractions");
  f.overlay.add(sub, "--out", "output.json", f.out, "Output JSON path (stdout when omitted)");
}

int run_evaluate(EvaluateFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.overlay.apply(cfg);
  const Section s(cfg, "");
  s.allow({"report", "metrics", "k_fractions", "output", "seed"});
  s.sub("output").allow({"json"});
  const auto metrics = s.get<std::vector<std::string>>(
      "metrics", {"deletion", "insertion", "aopc_comprehensiveness", "aopc_sufficiency"});
  for (const auto& m : metrics)
    if (m != "deletion" && m != "insertion" && m != "aopc_comprehensiveness" && m != "aopc_sufficiency")
      throw ConfigError("config key 'metrics': unknown metric '" + m + "'");

  lx::ExplanationReport report = lx::ExplanationReport::load(s.require<std::string>("report"));
  std::size_t calls = 0;
  for (auto& run : report.runs()) {
    if (run.value("kind", "") != "attribution") continue;
    const auto& rc = run.at("config");
    const lx::LoadedModel loaded = load_model(rc.at("model").get<std::string>());
    lx::MetricConfig mcfg;
    mcfg.perturbation.replacement = lx::parse_replacement(rc.at("perturbation").at("replacement").get<std::string>());
    if (s.has("k_fractions")) mcfg.k_fractions = s.get<std::vector<double>>("k_fractions", {});
    const auto batch = rc.value("batch_size", std::size_t{32});

    for (auto& input : run.at("inputs")) {
      const lx::TokenizedText tok = loaded.tokenizer->encode(input.at("text").get<std::string>());
      const auto generated = input.value("generated_ids", std::vector<lx::TokenId>{});
      for (auto& rj : input.at("results")) {
        const lx::AttributionResult r = lx::attribution_from_json(rj);
        std::vector<lx::TokenId> prefix;
        if (r.target.kind == lx::Target::Kind::kGeneratedToken) {
          const auto p = static_cast<std::size_t>(*r.target.output_position);
          if (p > generated.size()) lx::fail(lx::ErrorCode::kFormat, "report lacks the generated prefix");
          prefix.assign(generated.begin(), generated.begin() + static_cast<std::ptrdiff_t>(p));
        }
        const lx::TargetScorer scorer(loaded.model, r.target, r.inference_mode, prefix, batch);
        lx::Json out = lx::Json::array();
        for (const auto& m : metrics) {
          if (m == "deletion") out.push_back(lx::to_json(lx::deletion(scorer, *loaded.tokenizer, tok, r, mcfg), m));
          if (m == "insertion") out.push_back(lx::to_json(lx::insertion(scorer, *loaded.tokenizer, tok, r, mcfg), m));
          if (m.rfind("aopc_", 0) == 0) {
            const auto variant = lx::parse_aopc_variant(m.substr(5));
            out.push_back(lx::to_json(lx::aopc(scorer, *loaded.tokenizer, tok, r, variant, mcfg), variant));
          }
        }
        calls += scorer.model_calls();
        rj["metrics"] = std::move(out);
      }
    }
  }
  report.timing()["metric_model_calls"] = calls;
  write_output(report, s.sub("output").get<std::string>("json", ""));
  return 0;
}

// ---------------------------------------------------------------------------
// concepts

struct ConceptFlags {
  std::string config, corpus, model, split_point, granularity, kind, out, activations, model_file, method, endpoint,
      estimator, inference_mode, other;
  std::vector<std::string> texts, metrics;
  std::vector<int> targets;
  std::vector<std::size_t> concepts;
  std::uint64_t seed = 0;
  std::size_t c = 0, k = 0, epochs = 0, batch_size = 0, max_iters = 0, top = 0, timeout_ms = 0;
  double l1 = 0, lr = 0;
  bool standardize = false, timing = false;
  Overlay fit, interpret, importance, metrics_overlay;
  CLI::App* fit_cmd = nullptr;
  CLI::App* interpret_cmd = nullptr;
  CLI::App* importance_cmd = nullptr;
  CLI::App* metrics_cmd = nullptr;
};

void add_concepts(CLI::App& app, ConceptFlags& f) {
  CLI::App* concepts = app.add_subcommand("concepts", "Concept-based explanations");
  concepts->require_subcommand(1);

  CLI::App* fit = f.fit_cmd = concepts->add_subcommand("fit", "Fit a concept model on corpus activations");
  fit->add_option("--config", f.config, "JSON config file");
  f.fit.add(fit, "--corpus", "corpus", f.corpus, "UTF-8 corpus, one document per line");
  f.fit.add(fit, "--model", "model", f.model, "Registered model name");
  f.fit.add(fit, "--split-point", "split_point", f.split_point, "Layer after which to split");
  f.fit.add(fit, "--granularity", "granularity", f.granularity,
            "cls_token | all_tokens | non_special_tokens | word_mean");
  f.fit.add(fit, "--kind", "kind", f.kind, "Concept model kind");
  f.fit.add(fit, "--c", "c", f.c, "Number of concepts");
  f.fit.add(fit, "--seed", "seed", f.seed, "Random seed");
  f.fit.add(fit, "--max-iters", "max_iters", f.max_iters, "KMeans / NMF iterations");
  f.fit.add(fit, "--k", "sae.k", f.k, "TopK sparsity");
  f.fit.add(fit, "--l1", "sae.l1_coef", f.l1, "Vanilla SAE L1 coefficient");
  f.fit.add(fit, "--lr", "sae.lr", f.lr, "SAE learning rate");
  f.fit.add(fit, "--epochs", "sae.epochs", f.epochs, "SAE epochs");
  f.fit.add(fit, "--batch-size", "sae.batch_size", f.batch_size, "SAE batch size");
  f.fit.add_flag(fit, "--standardize", "sae.standardize", f.standardize, "Standardize activations for SAEs");
  f.fit.add(fit, "--out", "output.model", f.out, "Concept model file");
  f.fit.add(fit, "--activations", "output.activations", f.activations, "Activation cache path");
  f.fit.add_flag(fit, "--timing", "timing", f.timing, "Print wall-clock seconds to stderr");

  CLI::App* interp = f.interpret_cmd = concepts->add_subcommand("interpret", "Interpret concepts");
  interp->add_option("--config", f.config, "JSON config file");
  f.interpret.add(interp, "--model-file", "model_file", f.model_file, "Concept model file");
  f.interpret.add(interp, "--activations", "activations", f.activations, "Activation cache (default: beside model)");
  f.interpret.add(interp, "--corpus", "corpus", f.corpus, "Corpus the activations came from");
  f.interpret.add(interp, "--method", "method", f.method, "maxact_words | top_vocab | llm_label");
  f.interpret.add(interp, "--k", "k", f.top, "Evidence items per concept");
  f.interpret.add(interp, "--concept", "concepts", f.concepts, "Concept ids (repeatable; default all)");
  f.interpret.add(interp, "--endpoint", "labeling.endpoint", f.endpoint, "Labeling endpoint (stub when omitted)");
  f.interpret.add(interp, "--timeout-ms", "labeling.timeout_ms", f.timeout_ms, "Labeling request timeout");
  f.interpret.add(interp, "--out", "output.json", f.out, "Output JSON path (stdout when omitted)");

  CLI::App* imp = f.importance_cmd = concepts->add_subcommand("importance", "Concept-to-output importance");
  imp->add_option("--config", f.config, "JSON config file");
  f.importance.add(imp, "--model-file", "model_file", f.model_file, "Concept model file");
  f.importance.add(imp, "--text", "texts", f.texts, "Input text (repeatable)");
  f.importance.add(imp, "--target", "targets", f.targets, "Class index or output position (repeatable)");
  f.importance.add(imp, "--estimator", "estimator", f.estimator, "grad | concept_x_grad");
  f.importance.add(imp, "--inference-mode", "inference_mode", f.inference_mode, "logits | softmax | log_softmax");
  f.importance.add(imp, "--out", "output.json", f.out, "Output JSON path (stdout when omitted)");

  CLI::App* met = f.metrics_cmd = concepts->add_subcommand("metrics", "Concept-space metrics");
  met->add_option("--config", f.config, "JSON config file");
  f.metrics_overlay.add(met, "--model-file", "model_file", f.model_file, "Concept model file");
  f.metrics_overlay.add(met, "--activations", "activations", f.activations, "Activation cache (default: beside model)");
  f.metrics_overlay.add(met, "--other", "other", f.other, "Second concept model for stability");
  f.metrics_overlay.add(met, "--metric", "metrics", f.metrics, "mse | fid | sparsity | stability (repeatable)");
  f.metrics_overlay.add(met, "--out", "output.json", f.out, "Output JSON path (stdout when omitted)");
}

std::string default_activation_path(const std::string& model_file) { return model_file + ".acts"; }

struct ConceptSource {
  lx::LoadedModel loaded;
  std::shared_ptr<const lx::SplitModel> split;
};

ConceptSource source_of(const lx::ConceptModel& model) {
  if (!model.source.is_object() || !model.source.contains("model") || !model.source.contains("split_point"))
    lx::fail(lx::ErrorCode::kFormat, "concept model file does not record its source model");
  ConceptSource s;
  s.loaded = load_model(model.source["model"].get<std::string>());
  s.split = std::make_shared<lx::SplitModel>(s.loaded.model, model.source["split_point"].get<std::string>());
  return s;
}

lx::Json concept_run(const std::string& stage, json config) {
  lx::Json run;
  run["kind"] = "concepts";
  run["stage"] = stage;
  run["config"] = std::move(config);
  return run;
}

int run_fit(ConceptFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.fit.apply(cfg);
  const Section s(cfg, "");
  s.allow({"corpus", "model", "split_point", "granularity", "kind", "c", "seed", "max_iters", "tol", "sae", "output",
           "timing"});
  const Section out = s.sub("output");
  out.allow({"model", "activations"});
  const Section sae = s.sub("sae");
  sae.allow({"k", "l1_coef", "lr", "epochs", "batch_size", "standardize"});

  const auto model_name = s.require<std::string>("model");
  const lx::LoadedModel loaded = load_model(model_name);
  const auto layers = loaded.model->layer_names();
  const auto split_point = s.get<std::string>("split_point", layers.back());
  const lx::SplitModel split = keyed("split_point", [&] { return lx::SplitModel(loaded.model, split_point); });
  const auto default_granularity =
      loaded.model->task() == lx::Task::kClassification ? "cls_token" : "non_special_tokens";
  const auto granularity = keyed("granularity", [&] {
    return lx::parse_activation_granularity(s.get<std::string>("granularity", default_granularity));
  });
  const auto kind = keyed("kind", [&] { return lx::parse_concept_kind(s.require<std::string>("kind")); });

  lx::ConceptConfig cc;
  cc.c = s.get<std::size_t>("c", cc.c);
  cc.seed = s.get<std::uint64_t>("seed", 0);
  cc.max_iters = s.get<std::size_t>("max_iters", cc.max_iters);
  cc.tol = s.get<double>("tol", cc.tol);
  cc.sae.k = sae.get<std::size_t>("k", cc.sae.k);
  cc.sae.l1_coef = sae.get<double>("l1_coef", cc.sae.l1_coef);
  cc.sae.lr = sae.get<double>("lr", cc.sae.lr);
  cc.sae.epochs = sae.get<std::size_t>("epochs", cc.sae.epochs);
  cc.sae.batch_size = sae.get<std::size_t>("batch_size", cc.sae.batch_size);
  cc.sae.standardize = sae.get<bool>("standardize", cc.sae.standardize);
  if (lx::is_sae(kind)) {
    lx::SAEConfig check = cc.sae;
    check.c = cc.c;
    keyed("sae", [&] { check.validate(kind); return 0; });
  }
  if (cc.c == 0) throw ConfigError("config key 'c' must be positive");

  const auto model_path = out.require<std::string>("model");
  const auto acts_path = out.get<std::string>("activations", default_activation_path(model_path));
  const auto corpus = read_lines(s.require<std::string>("corpus"));
  if (corpus.empty()) lx::fail(lx::ErrorCode::kEmptyInput, "corpus has no documents");

  const auto t0 = std::chrono::steady_clock::now();
  const lx::ActivationBundle bundle = lx::collect_activations(split, *loaded.tokenizer, corpus, granularity);
  lx::ConceptModel model = lx::fit_concepts(kind, bundle, cc);
  model.source["model"] = model_name;
  lx::save_activations(bundle, acts_path);
  model.save(model_path);
  if (s.get<bool>("timing", false)) std::cerr << "fit: " << seconds_since(t0) << " s\n";
  return 0;
}

int run_interpret(ConceptFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.interpret.apply(cfg);
  const Section s(cfg, "");
  s.allow({"model_file", "activations", "corpus", "method", "k", "concepts", "labeling", "output", "seed"});
  const Section labeling = s.sub("labeling");
  labeling.allow({"endpoint", "timeout_ms"});
  s.sub("output").allow({"json"});
  const auto method = s.get<std::string>("method", "maxact_words");
  if (method != "maxact_words" && method != "top_vocab" && method != "llm_label")
    throw ConfigError("config key 'method': unknown interpretation method '" + method + "'");
  const auto k = s.get<std::size_t>("k", 5);

  const auto model_file = s.require<std::string>("model_file");
  const lx::ConceptModel model = lx::ConceptModel::load(model_file);
  const ConceptSource src = source_of(model);
  auto ids = s.get<std::vector<std::size_t>>("concepts", {});
  if (ids.empty())
    for (std::size_t j = 0; j < model.concepts(); ++j) ids.push_back(j);
  for (auto j : ids)
    if (j >= model.concepts()) throw ConfigError("config key 'concepts': concept " + std::to_string(j) + " out of range");

  std::vector<lx::ConceptInterpretation> interps;
  if (method == "top_vocab") {
    for (auto j : ids) interps.push_back(lx::top_vocab(*src.split, model, *src.loaded.tokenizer, j, k));
  } else {
    const auto bundle = lx::load_activations(s.get<std::string>("activations", default_activation_path(model_file)));
    std::vector<lx::TokenizedText> corpus;
    for (const auto& line : read_lines(s.require<std::string>("corpus"))) corpus.push_back(src.loaded.tokenizer->encode(line));
    const auto all = lx::maxact_words(model, bundle, corpus, *src.loaded.tokenizer, k);
    for (auto j : ids) interps.push_back(all[j]);
    if (method == "llm_label") {
      std::unique_ptr<lx::LabelingClient> client;
      if (labeling.has("endpoint")) {
        const auto timeout = std::chrono::milliseconds(labeling.get<std::size_t>("timeout_ms", 10000));
        client = keyed("labeling.endpoint", [&] {
          return std::make_unique<lx::HttpLabelingClient>(labeling.get<std::string>("endpoint", ""), timeout);
        });
      } else {
        client = std::make_unique<lx::StubLabelingClient>();
      }
      for (auto& i : interps) i = lx::llm_label(i, *client);
    }
  }

  lx::ExplanationReport report;
  json echo = {{"model_file", std::filesystem::path(model_file).filename().string()},
               {"method", method},
               {"k", k}};
  lx::Json run = concept_run("interpret", echo);
  run["source"] = model.source;
  run["concept_kind"] = lx::to_string(model.kind());
  lx::Json out = lx::Json::array();
  for (const auto& i : interps) out.push_back(lx::to_json(i));
  run["interpretations"] = std::move(out);
  report.runs().push_back(std::move(run));
  write_output(report, s.sub("output").get<std::string>("json", ""));
  return 0;
}

int run_importance(ConceptFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.importance.apply(cfg);
  const Section s(cfg, "");
  s.allow({"model_file", "texts", "targets", "estimator", "inference_mode", "output", "seed"});
  s.sub("output").allow({"json"});
  const auto estimator =
      keyed("estimator", [&] { return lx::parse_importance_estimator(s.get<std::string>("estimator", "grad")); });
  const auto mode =
      keyed("inference_mode", [&] { return lx::parse_inference_mode(s.get<std::string>("inference_mode", "logits")); });
  const auto texts = s.get<std::vector<std::string>>("texts", {});
  if (texts.empty()) throw ConfigError("missing config key 'texts' (or --text)");
  const auto model_file = s.require<std::string>("model_file");
  const lx::ConceptModel model = lx::ConceptModel::load(model_file);
  const ConceptSource src = source_of(model);

  std::vector<std::optional<lx::Target>> targets = {std::nullopt};
  if (s.has("targets")) {
    targets.clear();
    for (int t : s.get<std::vector<int>>("targets", {}))
      targets.emplace_back(src.loaded.model->task() == lx::Task::kClassification ? lx::Target::for_class(t)
                                                                                 : lx::Target::for_position(t));
  }

  lx::Json inputs = lx::Json::array();
  for (const auto& text : texts) {
    for (const auto& target : targets) {
      const auto imp = lx::concept_importance(*src.split, model, *src.loaded.tokenizer, text, target, estimator, mode);
      lx::Json values = lx::Json::array();
      for (const auto& i : imp) values.push_back(lx::to_json(i));
      inputs.push_back({{"text", text}, {"importance", std::move(values)}});
    }
  }
  lx::ExplanationReport report;
  lx::Json run = concept_run("importance", {{"model_file", std::filesystem::path(model_file).filename().string()},
                                            {"estimator", lx::to_string(estimator)},
                                            {"inference_mode", lx::to_string(mode)}});
  run["source"] = model.source;
  run["inputs"] = std::move(inputs);
  report.runs().push_back(std::move(run));
  write_output(report, s.sub("output").get<std::string>("json", ""));
  return 0;
}

int run_metrics(ConceptFlags& f) {
  json cfg = load_config(f.config);
  apply_env_seed(cfg);
  f.metrics_overlay.apply(cfg);
  const Section s(cfg, "");
  s.allow({"model_file", "activations", "other", "metrics", "output", "seed"});
  s.sub("output").allow({"json"});
  const auto model_file = s.require<std::string>("model_file");
  std::vector<std::string> names = {"mse", "fid", "sparsity"};
  if (s.has("other")) names.push_back("stability");
  names = s.get<std::vector<std::string>>("metrics", names);
  for (const auto& n : names)
    if (n != "mse" && n != "fid" && n != "sparsity" && n != "stability")
      throw ConfigError("config key 'metrics': unknown concept metric '" + n + "'");

  const lx::ConceptModel model = lx::ConceptModel::load(model_file);
  std::optional<lx::ConceptModel> other;
  if (s.has("other")) other = lx::ConceptModel::load(s.get<std::string>("other", ""));
  const auto bundle = lx::load_activations(s.get<std::string>("activations", default_activation_path(model_file)));
  const auto m = lx::concept_metrics(model, bundle, other ? &*other : nullptr, names);

  lx::ExplanationReport report;
  lx::Json run = concept_run("metrics", {{"model_file", std::filesystem::path(model_file).filename().string()}});
  run["source"] = model.source;
  lx::Json values = lx::Json::object();
  for (const auto& n : names) values[n] = m.values.at(n);
  run["metrics"] = std::move(values);
  run["warnings"] = m.warnings;
  report.runs().push_back(std::move(run));
  write_output(report, s.sub("output").get<std::string>("json", ""));
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportFlags {
  std::string in, out;
};

int run_report(const ReportFlags& f) {
  const lx::ExplanationReport report = lx::ExplanationReport::load(f.in);
  lx::emit_html(report, f.out);
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"lexplain: attribution and concept-based explanations for language models"};
  app.require_subcommand(1);
  AttributeFlags attribute;
  EvaluateFlags evaluate;
  ConceptFlags concepts;
  ReportFlags rep;
  add_attribute(app, attribute);
  add_evaluate(app, evaluate);
  add_concepts(app, concepts);
  CLI::App* report_cmd = app.add_subcommand("report", "Render a report JSON as a self-contained HTML page");
  report_cmd->add_option("--in", rep.in, "Report JSON")->required();
  report_cmd->add_option("--out", rep.out, "HTML output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (app.got_subcommand("attribute")) return run_attribute(attribute);
  if (app.got_subcommand("evaluate")) return run_evaluate(evaluate);
  if (app.got_subcommand("report")) return run_report(rep);
  if (concepts.fit_cmd->parsed()) return run_fit(concepts);
  if (concepts.interpret_cmd->parsed()) return run_interpret(concepts);
  if (concepts.importance_cmd->parsed()) return run_importance(concepts);
  if (concepts.metrics_cmd->parsed()) return run_metrics(concepts);
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lx::Error& e) {
    const bool config = e.code() == lx::ErrorCode::kInvalidConfig || e.code() == lx::ErrorCode::kUnknownMethod ||
                        e.code() == lx::ErrorCode::kUnknownSplitPoint;
    std::cerr << (config ? "config error: " : "error: ") << e.what() << "\n";
    return config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
