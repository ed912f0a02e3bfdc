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

// Self-checks behind `tsmhe check`: derivatives against finite differences,
// the closed-form coupled QP against the dense KKT solve, and the split
// identities of the time-split problem.

#ifndef TSMHE_CHECKS_H_
#define TSMHE_CHECKS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tsmhe/qp_core.h"

namespace tsmhe {

struct RandomQpShape {
  int min_blocks = 2;
  int max_blocks = 6;
  int min_vars = 4;
  int max_vars = 12;
  bool allow_empty_constraints = true;
  bool allow_empty_coupling = true;
};

// Strongly convex blocks (H = M^T M + I / 2), dense C_i and A_i. Row counts
// are drawn so that C_i has full row rank and the Schur matrix is
// nonsingular with probability one.
std::vector<QpBlock> random_coupled_qp(std::mt19937_64& rng,
                                       const RandomQpShape& shape = {});

// max over (lambda, mu, dX) of ||a - b||_inf / max(1, ||b||_inf)
double qp_relative_error(const QpSolution& a, const QpSolution& b);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed() const { return value <= limit; }
};

std::vector<CheckResult> run_self_checks(std::uint64_t seed = 7);

}  // namespace tsmhe

#endif  // TSMHE_CHECKS_H_
