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

#include "lexplain/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

namespace lexplain::kernels {

namespace {
std::atomic<Execution> g_execution{Execution::kParallel};

int nearest(const Mat& points, const Mat& centroids, Eigen::Index i, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (points.row(i) - centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  *dist = best_d;
  return best;
}

void nnls_row(const Mat& gram, const Mat& rhs, Eigen::Index i, int max_sweeps, double tol, Mat& out) {
  const Eigen::Index c = gram.rows();
  RowVec t = RowVec::Zero(c);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) {
      if (gram(j, j) <= 0.0) continue;
      const double grad = t.dot(gram.row(j)) - rhs(i, j);
      const double next = std::max(0.0, t(j) - grad / gram(j, j));
      change = std::max(change, std::abs(next - t(j)));
      t(j) = next;
    }
    if (change <= tol) break;
  }
  out.row(i) = t;
}

void topk_row(const Mat& values, Eigen::Index i, std::size_t k, Mat& out) {
  const auto c = static_cast<std::size_t>(values.cols());
  std::vector<Eigen::Index> idx(c);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t keep = std::min(k, c);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double va = values(i, a), vb = values(i, b);
                      return va > vb || (va == vb && a < b);
                    });
  out.row(i).setZero();
  for (std::size_t r = 0; r < keep; ++r) out(i, idx[r]) = values(i, idx[r]);
}

}  // namespace

Execution default_execution() { return g_execution.load(); }
void set_default_execution(Execution e) { g_execution.store(e); }

std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& f, Execution e) {
  std::vector<double> out(n);
  if (e == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<Mat> map_indexed_mat(std::size_t n, const std::function<Mat(std::size_t)>& f, Execution e) {
  std::vector<Mat> out(n);
  if (e == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
  return out;
}

double assign_nearest(const Mat& points, const Mat& centroids, std::vector<int>& labels, Execution e) {
  require(points.cols() == centroids.cols(), ErrorCode::kDimensionMismatch, "centroid width differs from points");
  const Eigen::Index n = points.rows();
  labels.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  if (e == Execution::kSerial) {
    for (Eigen::Index i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = nearest(points, centroids, i, &dist[static_cast<std::size_t>(i)]);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = nearest(points, centroids, i, &dist[static_cast<std::size_t>(i)]);
    }
  }
  // Summed serially so the inertia does not depend on the thread count.
  return std::accumulate(dist.begin(), dist.end(), 0.0);
}

Mat nnls_rows(const Mat& gram, const Mat& rhs, int max_sweeps, double tol, Execution e) {
  require(gram.rows() == gram.cols() && gram.rows() == rhs.cols(), ErrorCode::kDimensionMismatch,
          "nnls system shapes disagree");
  Mat out(rhs.rows(), rhs.cols());
  if (e == Execution::kSerial) {
    for (Eigen::Index i = 0; i < rhs.rows(); ++i) nnls_row(gram, rhs, i, max_sweeps, tol, out);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < rhs.rows(); ++i) nnls_row(gram, rhs, i, max_sweeps, tol, out);
  }
  return out;
}

Mat topk_rows(const Mat& values, std::size_t k, Execution e) {
  Mat out(values.rows(), values.cols());
  if (e == Execution::kSerial) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) topk_row(values, i, k, out);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < values.rows(); ++i) topk_row(values, i, k, out);
  }
  return out;
}

}  // namespace lexplain::kernels
