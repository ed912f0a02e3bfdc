// Copyright 2026 The tsmhe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsmhe/error.h"

namespace tsmhe {
namespace {

std::string decorate(ErrorCode code, const std::string& message, int block) {
  std::string out = std::string(error_code_name(code)) + ": " + message;
  if (block >= 0) out += " (block " + std::to_string(block) + ")";
  return out;
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid argument";
    case ErrorCode::kDimensionMismatch:
      return "dimension mismatch";
    case ErrorCode::kInvalidPartition:
      return "invalid partition";
    case ErrorCode::kOriginSingularity:
      return "origin singularity";
    case ErrorCode::kNotPositiveDefinite:
      return "not positive definite";
    case ErrorCode::kRankDeficientConstraints:
      return "rank-deficient constraints";
    case ErrorCode::kSingularSchur:
      return "singular Schur complement";
    case ErrorCode::kSingularKkt:
      return "singular KKT matrix";
    case ErrorCode::kFactorizationFailure:
      return "factorization failure";
    case ErrorCode::kScenarioGeneration:
      return "scenario generation";
    case ErrorCode::kIo:
      return "i/o";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotPositiveDefinite:
    case ErrorCode::kRankDeficientConstraints:
    case ErrorCode::kSingularSchur:
    case ErrorCode::kSingularKkt:
    case ErrorCode::kFactorizationFailure:
    case ErrorCode::kOriginSingularity:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message, int block)
    : std::runtime_error(decorate(code, message, block)),
      code_(code),
      block_(block) {}

}  // namespace tsmhe
