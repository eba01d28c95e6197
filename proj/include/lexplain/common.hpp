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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lexplain {

/// Row-major double matrix used for all in-memory model math.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

/// Row-major float32 matrix. Every matrix that crosses a public boundary
/// (activation bundles, concept-model parameters, files) uses this type.
using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TokenId = std::int32_t;

enum class ErrorCode {
  kEmptyInput,
  kInvalidInput,
  kUnknownSplitPoint,
  kMissingClsToken,
  kDimensionMismatch,
  kTooFewUnits,
  kInsufficientSamples,
  kInvalidTarget,
  kUnknownMethod,
  kPipelineContract,
  kEmptyResult,
  kInsufficientData,
  kInvalidActivations,
  kTrainingDiverged,
  kUnsupportedTask,
  kLabelingUnavailable,
  kMissingCounterpart,
  kInvalidConfig,
  kFormat,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the three-stage pipeline; `stage()` is one of
/// "perturbations", "inference" or "aggregation".
class PipelineContractError : public Error {
 public:
  PipelineContractError(std::string stage, const std::string& message)
      : Error(ErrorCode::kPipelineContract, stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace lexplain
