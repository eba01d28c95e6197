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

#include "container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lexplain/common.hpp"

namespace lexplain::detail {

static_assert(std::endian::native == std::endian::little, "artifact files assume a little-endian host");

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::kIo, "cannot write " + path.string());
  }
}

}  // namespace

void write_container(const std::filesystem::path& path, const Magic& magic, const nlohmann::ordered_json& header,
                     const std::vector<float>& payload) {
  const std::string text = header.dump();
  const auto length = static_cast<std::uint32_t>(text.size());
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
  }
  commit(tmp, path);
}

Container read_container(const std::filesystem::path& path, const Magic& magic, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  Magic found{};
  in.read(found.data(), static_cast<std::streamsize>(found.size()));
  if (!in || found != magic) fail(ErrorCode::kFormat, "unrecognized " + what + " file: " + path.string());
  std::uint32_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in) fail(ErrorCode::kFormat, "truncated " + what + " header: " + path.string());
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) fail(ErrorCode::kFormat, "truncated " + what + " header: " + path.string());

  Container c;
  try {
    c.header = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, "malformed " + what + " header: " + e.what());
  }
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() % sizeof(float) != 0) fail(ErrorCode::kFormat, "ragged " + what + " payload");
  c.payload.resize(rest.size() / sizeof(float));
  std::memcpy(c.payload.data(), rest.data(), rest.size());
  return c;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
  }
  commit(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lexplain::detail
