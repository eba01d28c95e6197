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

// Concrete layers for the reference models. Internal to the library.

#include <cstddef>

#include "lexplain/model.hpp"

namespace lexplain::detail {

/// Adds a learned positional embedding to each row.
class PositionalEmbedding final : public Layer {
 public:
  explicit PositionalEmbedding(Mat table) : table_(std::move(table)) {}
  Mat forward(const Mat& x) const override;
  Mat backward(const Mat& x, const Mat& dy) const override;

 private:
  Mat table_;
};

class Identity final : public Layer {
 public:
  Mat forward(const Mat& x) const override { return x; }
  Mat backward(const Mat&, const Mat& dy) const override { return dy; }
};

/// Row 0 becomes the sum of all rows; other rows pass through.
class SumIntoFirstRow final : public Layer {
 public:
  Mat forward(const Mat& x) const override;
  Mat backward(const Mat& x, const Mat& dy) const override;
};

struct LayerNormParams {
  RowVec gain;
  RowVec bias;
};

/// Single-head pre-LayerNorm transformer block:
///   h = x + Attn(LN1(x));  y = h + MLP(LN2(h)),  MLP = GELU(. W1 + c1) W2 + c2.
class TransformerBlock final : public Layer {
 public:
  struct Params {
    LayerNormParams ln1, ln2;
    Mat wq, wk, wv, wo;  // d x d
    Mat w1;              // d x m
    RowVec c1;           // m
    Mat w2;              // m x d
    RowVec c2;           // d
  };

  TransformerBlock(Params params, bool causal) : p_(std::move(params)), causal_(causal) {}
  Mat forward(const Mat& x) const override;
  Mat backward(const Mat& x, const Mat& dy) const override;

 private:
  struct Cache;
  Mat run(const Mat& x, Cache* cache) const;

  Params p_;
  bool causal_;
};

/// logits = x W^T + b, one row per position.
class LinearHead final : public Layer {
 public:
  LinearHead(Mat weight, RowVec bias) : weight_(std::move(weight)), bias_(std::move(bias)) {}
  Mat forward(const Mat& x) const override;
  Mat backward(const Mat& x, const Mat& dy) const override;
  const Mat& weight() const { return weight_; }

 private:
  Mat weight_;  // outputs x d
  RowVec bias_;
};

/// logits = x[0] W^T + b, a single row read from the first position.
class FirstRowHead final : public Layer {
 public:
  FirstRowHead(Mat weight, RowVec bias) : weight_(std::move(weight)), bias_(std::move(bias)) {}
  Mat forward(const Mat& x) const override;
  Mat backward(const Mat& x, const Mat& dy) const override;

 private:
  Mat weight_;
  RowVec bias_;
};

// Exposed for unit tests of the block internals.
Mat layer_norm(const Mat& x, const LayerNormParams& p);
Mat layer_norm_backward(const Mat& x, const LayerNormParams& p, const Mat& dy);
double gelu(double z);
double gelu_derivative(double z);

}  // namespace lexplain::detail
