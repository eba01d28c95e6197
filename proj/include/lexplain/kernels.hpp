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

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the two produce bitwise-identical results because each
// output element is computed by exactly one iteration with a fixed
// accumulation order. Tests compare them, bench/ times them.

#include <cstddef>
#include <functional>
#include <vector>

#include "lexplain/common.hpp"

namespace lexplain::kernels {

enum class Execution { kSerial, kParallel };

/// Process-wide default used by estimators; tests flip it to compare paths.
Execution default_execution();
void set_default_execution(Execution e);

/// out[i] = f(i) for i in [0, n).
std::vector<double> map_indexed(std::size_t n, const std::function<double(std::size_t)>& f,
                                Execution e = default_execution());

/// Same, for matrix-valued work items.
std::vector<Mat> map_indexed_mat(std::size_t n, const std::function<Mat(std::size_t)>& f,
                                 Execution e = default_execution());

/// Nearest-centroid assignment. Returns the inertia (sum of squared
/// distances); ties go to the lower centroid index.
double assign_nearest(const Mat& points, const Mat& centroids, std::vector<int>& labels,
                      Execution e = default_execution());

/// Row-wise nonnegative least squares: for each row b of `targets`, solves
/// min_t ||t D - b||^2 s.t. t >= 0 by cyclic coordinate descent on the
/// normal equations (gram = D D^T, rhs = targets D^T).
Mat nnls_rows(const Mat& gram, const Mat& rhs, int max_sweeps, double tol, Execution e = default_execution());

/// Keeps the k largest entries of each row (ties to the lower column index),
/// zeroing the rest.
Mat topk_rows(const Mat& values, std::size_t k, Execution e = default_execution());

}  // namespace lexplain::kernels
