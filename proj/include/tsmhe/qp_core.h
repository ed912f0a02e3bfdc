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

// Closed-form solution of the block-coupled equality-constrained QP
//
//   min  sum_i 0.5 dX_i^T H_i dX_i + g_i^T dX_i
//   s.t. D_i + C_i dX_i = 0                       | mu_i
//        sum_i A_i (X_i^+ + dX_i) = 0             | lambda
//
// by eliminating dX_i and mu_i block by block and solving the r x r Schur
// system for lambda:
//
//   S lambda = sum_i s_i,   S = sum_i (G_i - Q_i R_i^{-1} Q_i^T)
//   G_i = A_i H_i^{-1} A_i^T,  Q_i = A_i H_i^{-1} C_i^T,  R_i = C_i H_i^{-1} C_i^T
//   s_i = A_i X_i^+ - A_i H_i^{-1} g_i + Q_i R_i^{-1} (C_i H_i^{-1} g_i - D_i)
//
//   mu_i = -R_i^{-1} (C_i H_i^{-1} g_i + Q_i^T lambda - D_i)
//   dX_i = -H_i^{-1} (g_i + C_i^T mu_i + A_i^T lambda)
//
// Requires H_i > 0 and C_i of full row rank. No regularization is applied
// here; callers that need H_i + eps I must add it themselves.

#ifndef TSMHE_QP_CORE_H_
#define TSMHE_QP_CORE_H_

#include <span>
#include <vector>

#include "tsmhe/model.h"

namespace tsmhe {

struct QpBlock {
  Matrix hessian;             // H_i, symmetric
  Vector gradient;            // g_i
  Matrix constraint_jacobian;  // C_i, may have zero rows
  Vector constraint_offset;   // D_i, same row count as C_i
  Matrix coupling;            // A_i, r x |X_i|
  Vector anchor;              // A_i X_i^+, r entries
};

struct QpDiagnostics {
  double schur_rcond = 1.0;    // reciprocal condition estimate of S
  bool schur_fallback = false;  // true if S needed the pivoted LU
  double min_constraint_rcond = 1.0;
};

struct QpSolution {
  Vector lambda;
  std::vector<Vector> mu;
  std::vector<Vector> delta;
  QpDiagnostics diagnostics;
};

struct QpOptions {
  // R_i with a smaller reciprocal condition estimate is rank deficient.
  double constraint_rcond_min = 1e-14;
  // S below this after the pivoted fallback is singular.
  double schur_rcond_min = 1e-15;
  int workers = 1;
};

// Per-block Schur data. Keeps the factorizations of H_i and R_i so the
// back-substitution reuses them.
struct SchurTerms {
  Matrix coupling_gram;    // G_i
  Matrix cross;            // Q_i
  Matrix constraint_gram;  // R_i
  Vector rhs;              // s_i

  Eigen::LLT<Matrix> hessian_factor;
  Eigen::LLT<Matrix> constraint_factor;
  Matrix hinv_coupling_t;    // H^{-1} A^T
  Matrix hinv_constraint_t;  // H^{-1} C^T
  Vector hinv_gradient;      // H^{-1} g
  double constraint_rcond = 1.0;

  // G_i - Q_i R_i^{-1} Q_i^T
  Matrix schur_contribution() const;
};

// Throws kNotPositiveDefinite / kRankDeficientConstraints naming
// block_index, or kDimensionMismatch.
SchurTerms schur_terms(const QpBlock& block, int block_index = 0,
                       const QpOptions& options = {});

// Throws kSingularSchur when S is singular, plus the per-block errors above.
QpSolution solve_coupled_qp(std::span<const QpBlock> blocks,
                            const QpOptions& options = {});

// Assembles the full KKT matrix over (dX, mu, lambda) and solves it with a
// full-pivot LU. Throws kSingularKkt.
QpSolution dense_kkt_oracle(std::span<const QpBlock> blocks);

// ||(H_i dX_i + g_i + C_i^T mu_i + A_i^T lambda; C_i dX_i + D_i;
//    sum_i A_i (X_i^+ + dX_i))||_inf
double kkt_residual_qp(std::span<const QpBlock> blocks,
                       const QpSolution& solution);

}  // namespace tsmhe

#endif  // TSMHE_QP_CORE_H_
