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

#include "lexplain/concepts/analysis.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

// After Eigen: httplib pulls in <resolv.h>, whose _res macro clashes with
// Eigen parameter names.
#include <httplib.h>

namespace lexplain {

std::string StubLabelingClient::complete(const std::string&, const std::vector<std::string>& evidence) const {
  std::string out;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, evidence.size()); ++i) {
    if (i > 0) out += " / ";
    out += evidence[i];
  }
  return out;
}

HttpLabelingClient::HttpLabelingClient(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos, ErrorCode::kInvalidConfig, "labeling endpoint must be an http URL: " + url);
  const auto slash = url.find('/', scheme + 3);
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
  require(url.rfind("http://", 0) == 0, ErrorCode::kInvalidConfig, "only http:// labeling endpoints are supported");
  require(timeout_.count() > 0, ErrorCode::kInvalidConfig, "labeling timeout must be positive");
}

std::string HttpLabelingClient::complete(const std::string& prompt, const std::vector<std::string>&) const {
  std::lock_guard lock(mutex_);
  httplib::Client client(origin_);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());
  const nlohmann::json body = {{"prompt", prompt}};
  const auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) fail(ErrorCode::kLabelingUnavailable, "request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) fail(ErrorCode::kLabelingUnavailable, "labeling endpoint returned HTTP " + std::to_string(res->status));
  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (!reply.is_object() || !reply.contains("label") || !reply["label"].is_string())
    fail(ErrorCode::kLabelingUnavailable, "labeling endpoint reply has no string \"label\"");
  return reply["label"].get<std::string>();
}

std::string labeling_prompt(const ConceptInterpretation& interp) {
  std::ostringstream out;
  out << "The following words most strongly activate one concept of a language model, strongest first:\n";
  for (const auto& [word, value] : interp.evidence) out << "- " << word << "\n";
  out << "Reply with a short label naming what the words have in common.";
  return out.str();
}

ConceptInterpretation llm_label(const ConceptInterpretation& interp, const LabelingClient& client) {
  ConceptInterpretation out = interp;
  out.method = InterpretationMethod::kLlmLabel;
  if (interp.evidence.empty()) {
    out.label = "";
    out.warnings.push_back("concept " + std::to_string(interp.concept_id) + " has no evidence to label");
    return out;
  }
  std::vector<std::string> words;
  for (const auto& e : interp.evidence) words.push_back(e.first);
  try {
    out.label = client.complete(labeling_prompt(interp), words);
  } catch (const std::exception& e) {
    ConceptInterpretation unlabeled = interp;
    unlabeled.label.reset();
    throw LabelingUnavailable(e.what(), std::move(unlabeled));
  }
  return out;
}

}  // namespace lexplain
