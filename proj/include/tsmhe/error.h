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

#ifndef TSMHE_ERROR_H_
#define TSMHE_ERROR_H_

#include <stdexcept>
#include <string>

namespace tsmhe {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kInvalidPartition,
  kOriginSingularity,
  kNotPositiveDefinite,
  kRankDeficientConstraints,
  kSingularSchur,
  kSingularKkt,
  kFactorizationFailure,
  kScenarioGeneration,
  kIo,
};

const char* error_code_name(ErrorCode code);

// True for failures that come from the numerics rather than from the inputs.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int block = -1);

  ErrorCode code() const { return code_; }
  // Sub-window index the failure refers to, or -1.
  int block() const { return block_; }

 private:
  ErrorCode code_;
  int block_;
};

}  // namespace tsmhe

#endif  // TSMHE_ERROR_H_
