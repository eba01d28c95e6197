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

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lexplain/model.hpp"
#include "lexplain/tokenizer.hpp"

namespace lxtest {

namespace lx = lexplain;

inline std::shared_ptr<const lx::Tokenizer> cls_tokenizer() { return lx::builtin_tokenizer(false); }
inline std::shared_ptr<const lx::Tokenizer> gen_tokenizer() { return lx::builtin_tokenizer(true); }

inline std::shared_ptr<const lx::ModelAdapter> bow(const std::map<std::string, double>& weights, double bias = 0.0) {
  return lx::make_linear_bag_of_words(*cls_tokenizer(), weights, bias);
}

/// Whole-word entries of the built-in vocabulary (letters only).
inline std::vector<std::string> plain_words() {
  std::vector<std::string> out;
  for (const auto& w : lx::builtin_vocabulary()) {
    bool ok = !w.empty();
    for (char ch : w) ok = ok && ch >= 'a' && ch <= 'z';
    if (ok) out.push_back(w);
  }
  return out;
}

/// Shapley values by the subset formula; `v` takes a bitmask of present players.
inline std::vector<double> brute_shapley(std::size_t m, const std::function<double(std::uint32_t)>& v) {
  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::uint32_t s = 0; s < (1u << m); ++s) {
      if (s & (1u << i)) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcount(s));
      const double w = fact[size] * fact[m - size - 1] / fact[m];
      phi[i] += w * (v(s | (1u << i)) - v(s));
    }
  }
  return phi;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-12);
}

}  // namespace lxtest
