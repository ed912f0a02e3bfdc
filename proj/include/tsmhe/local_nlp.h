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

// Per-sub-window machinery for the augmented local problem
//
//   min_X  J_i(X) + lambda^T A_i X + rho/2 ||X - Y_i||^2   s.t. F_i(X) = 0
//
// with Lagrangian L_i = J_i + lambda^T A_i (X - Y_i) + rho/2 ||X - Y_i||^2
// + mu^T F_i and KKT map phi_i(s, xi) = (grad_X L_i; F_i), where s = (X, mu)
// and xi = (Y_i, lambda).

#ifndef TSMHE_LOCAL_NLP_H_
#define TSMHE_LOCAL_NLP_H_

#include <optional>

#include "tsmhe/problem.h"

namespace tsmhe {

enum class HessianMode { kGaussNewton, kExactLagrangian };

struct LocalSolveConfig {
  double inner_tol = 1e-10;
  int inner_max_iter = 50;
  // First regularization added to the inner KKT Hessian when it fails to
  // factor; <= 0 means "use rho". Escalated x10, at most three times.
  double eps_h = 0.0;
  HessianMode hessian_mode = HessianMode::kGaussNewton;
};

struct LocalSolution {
  Vector x;
  Vector mu;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  int regularizations = 0;  // number of eps_h escalations used
};

// Equality-constrained SQP with full steps first, halved while an l1 merit
// function fails to decrease. Returns the best iterate with converged=false
// when inner_max_iter is hit; throws kFactorizationFailure when the inner
// KKT system cannot be factored even after regularization.
LocalSolution solve_local_subproblem(const SubProblem& sub,
                                     const Vector& lambda,
                                     const Vector& y_block, double rho,
                                     const LocalSolveConfig& cfg,
                                     const std::optional<Vector>& x_start = {},
                                     const std::optional<Vector>& mu_start = {});

Vector kkt_vector(const SubProblem& sub, const Vector& x_block,
                  const Vector& mu, const Vector& lambda,
                  const Vector& y_block, double rho);

// ||phi_i||_inf
double kkt_residual(const SubProblem& sub, const Vector& x_block,
                    const Vector& mu, const Vector& lambda,
                    const Vector& y_block, double rho);

// J^T J + rho I, plus residual and constraint curvature in exact mode.
Matrix lagrangian_hessian(const SubProblem& sub, const Vector& x_block,
                          const Vector& mu, double rho, HessianMode mode);

struct SensitivityPair {
  Matrix m;  // d phi / d s, (|X| + |F|) square
  Matrix n;  // d phi / d xi, (|X| + |F|) x (|X| + r)
};

SensitivityPair sensitivity_matrices(const SubProblem& sub,
                                     const Vector& x_block, const Vector& mu,
                                     const Vector& lambda,
                                     const Vector& y_block, double rho);

// s+ = s - M^{-1} (N (xi_new - xi_old) + residual). With residual = 0 this is
// the pure first-order predictor along the solution manifold; passing
// phi(s, xi_old) additionally corrects for s not lying exactly on it.
// Throws kSingularKkt when M is singular.
Vector tangent_predictor(const Vector& s, const Vector& xi_old,
                         const Vector& xi_new, const SensitivityPair& pair,
                         const std::optional<Vector>& residual = {});

}  // namespace tsmhe

#endif  // TSMHE_LOCAL_NLP_H_
