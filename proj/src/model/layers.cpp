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

#include "layers.hpp"

#include <cmath>
#include <limits>

namespace lexplain::detail {

namespace {
constexpr double kLayerNormEps = 1e-5;
constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kGeluCubic = 0.044715;
}  // namespace

Mat PositionalEmbedding::forward(const Mat& x) const {
  require(x.rows() <= table_.rows(), ErrorCode::kInvalidInput,
          "sequence length " + std::to_string(x.rows()) + " exceeds model maximum " +
              std::to_string(table_.rows()));
  return x + table_.topRows(x.rows());
}

Mat PositionalEmbedding::backward(const Mat&, const Mat& dy) const { return dy; }

Mat SumIntoFirstRow::forward(const Mat& x) const {
  Mat y = x;
  if (x.rows() > 0) y.row(0) = x.colwise().sum();
  return y;
}

Mat SumIntoFirstRow::backward(const Mat& x, const Mat& dy) const {
  Mat dx = dy;
  if (x.rows() > 0) {
    // y0 = sum_j x_j, y_i = x_i (i > 0)  =>  dx_0 = dy_0, dx_i = dy_i + dy_0.
    for (Eigen::Index i = 1; i < x.rows(); ++i) dx.row(i) += dy.row(0);
  }
  return dx;
}

Mat layer_norm(const Mat& x, const LayerNormParams& p) {
  Mat y(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / n;
    const RowVec centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    y.row(i) = (centered * inv).cwiseProduct(p.gain) + p.bias;
  }
  return y;
}

Mat layer_norm_backward(const Mat& x, const LayerNormParams& p, const Mat& dy) {
  Mat dx(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / n;
    const RowVec centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / n;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    const RowVec xhat = centered * inv;
    const RowVec dxhat = dy.row(i).cwiseProduct(p.gain);
    const double mean_dxhat = dxhat.sum() / n;
    const double mean_dxhat_xhat = dxhat.dot(xhat) / n;
    dx.row(i) = inv * (dxhat.array() - mean_dxhat - xhat.array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

double gelu(double z) {
  const double u = kSqrt2OverPi * (z + kGeluCubic * z * z * z);
  return 0.5 * z * (1.0 + std::tanh(u));
}

double gelu_derivative(double z) {
  const double u = kSqrt2OverPi * (z + kGeluCubic * z * z * z);
  const double t = std::tanh(u);
  const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * z * z);
  return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * du;
}

struct TransformerBlock::Cache {
  Mat n1, q, k, v, p, o, h, n2, z, g;
};

Mat TransformerBlock::run(const Mat& x, Cache* c) const {
  const Eigen::Index s = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(p_.wq.cols()));

  Mat n1 = layer_norm(x, p_.ln1);
  Mat q = n1 * p_.wq;
  Mat k = n1 * p_.wk;
  Mat v = n1 * p_.wv;
  Mat scores = (q * k.transpose()) * scale;
  Mat probs(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const Eigen::Index visible = causal_ ? i + 1 : s;
    const double mx = scores.row(i).head(visible).maxCoeff();
    double total = 0.0;
    for (Eigen::Index j = 0; j < s; ++j) {
      const double e = j < visible ? std::exp(scores(i, j) - mx) : 0.0;
      probs(i, j) = e;
      total += e;
    }
    probs.row(i) /= total;
  }
  Mat o = probs * v;
  Mat h = x + o * p_.wo;
  Mat n2 = layer_norm(h, p_.ln2);
  Mat z = (n2 * p_.w1).rowwise() + p_.c1;
  Mat g = z.unaryExpr([](double t) { return gelu(t); });
  Mat y = h + ((g * p_.w2).rowwise() + p_.c2);
  if (c != nullptr) {
    c->n1 = std::move(n1);
    c->q = std::move(q);
    c->k = std::move(k);
    c->v = std::move(v);
    c->p = std::move(probs);
    c->o = std::move(o);
    c->h = std::move(h);
    c->n2 = std::move(n2);
    c->z = std::move(z);
    c->g = std::move(g);
  }
  return y;
}

Mat TransformerBlock::forward(const Mat& x) const { return run(x, nullptr); }

Mat TransformerBlock::backward(const Mat& x, const Mat& dy) const {
  Cache c;
  run(x, &c);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p_.wq.cols()));

  // MLP branch.
  const Mat dg = dy * p_.w2.transpose();
  const Mat dz = dg.cwiseProduct(c.z.unaryExpr([](double t) { return gelu_derivative(t); }));
  const Mat dn2 = dz * p_.w1.transpose();
  const Mat dh = dy + layer_norm_backward(c.h, p_.ln2, dn2);

  // Attention branch.
  const Mat d_o = dh * p_.wo.transpose();
  const Mat dp = d_o * c.v.transpose();
  const Mat dv = c.p.transpose() * d_o;
  Mat ds(dp.rows(), dp.cols());
  for (Eigen::Index i = 0; i < dp.rows(); ++i) {
    const double inner = dp.row(i).dot(c.p.row(i));
    ds.row(i) = c.p.row(i).cwiseProduct((dp.row(i).array() - inner).matrix());
  }
  const Mat dq = (ds * c.k) * scale;
  const Mat dk = (ds.transpose() * c.q) * scale;
  const Mat dn1 = dq * p_.wq.transpose() + dk * p_.wk.transpose() + dv * p_.wv.transpose();
  return dh + layer_norm_backward(x, p_.ln1, dn1);
}

Mat LinearHead::forward(const Mat& x) const { return (x * weight_.transpose()).rowwise() + bias_; }

Mat LinearHead::backward(const Mat&, const Mat& dy) const { return dy * weight_; }

Mat FirstRowHead::forward(const Mat& x) const {
  require(x.rows() > 0, ErrorCode::kInvalidInput, "empty sequence");
  Mat out(1, weight_.rows());
  out.row(0) = x.row(0) * weight_.transpose() + bias_;
  return out;
}

Mat FirstRowHead::backward(const Mat& x, const Mat& dy) const {
  Mat dx = Mat::Zero(x.rows(), x.cols());
  dx.row(0) = dy.row(0) * weight_;
  return dx;
}

}  // namespace lexplain::detail
