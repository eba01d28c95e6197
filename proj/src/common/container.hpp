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

// Shared layout of the binary artifact files:
//   8-byte magic | uint32 LE header length | UTF-8 JSON header | float32 LE payload

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lexplain::detail {

using Magic = std::array<char, 8>;

struct Container {
  nlohmann::ordered_json header;
  std::vector<float> payload;
};

/// Writes to a temporary sibling and renames it into place.
void write_container(const std::filesystem::path& path, const Magic& magic, const nlohmann::ordered_json& header,
                     const std::vector<float>& payload);

/// Throws kFormat with `what` in the message when the magic does not match.
Container read_container(const std::filesystem::path& path, const Magic& magic, const std::string& what);

/// Atomic text write used by every JSON/HTML emitter.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string read_text(const std::filesystem::path& path);

}  // namespace lexplain::detail
