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

// Distributed solvers for the time-split MHE problem and the centralized
// baseline. Every outer iteration is fork-join: a parallel map over
// sub-windows, then a single coordinator solve for the coupling multiplier
// lambda, then a parallel back-substitution.
//
//   gauss-newton ALADIN  exact local solves, Gauss-Newton coordination QP
//   sensitivity ALADIN   coordination QP from the local iterate, local
//                        update by a tangent predictor (exact solve as
//                        fallback)
//   distributed SQP      no local solves; one coordination QP per iteration
//   centralized          distributed SQP with a single window

#ifndef TSMHE_SOLVERS_H_
#define TSMHE_SOLVERS_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsmhe/error.h"
#include "tsmhe/local_nlp.h"
#include "tsmhe/problem.h"

namespace tsmhe {

enum class Algorithm {
  kGaussNewtonAladin,
  kSensitivityAladin,
  kDistributedSqp,
  kCentralized,
};

// "gn-aladin", "sa-aladin", "dsqp", "centralized"
const char* algorithm_name(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(std::string_view name);
const char* hessian_mode_name(HessianMode mode);
std::optional<HessianMode> parse_hessian_mode(std::string_view name);

// Coordination Hessian shift shared by both ALADIN variants.
inline constexpr double kAladinQpRegularization = 25.0;

struct SolverConfig {
  Algorithm algorithm = Algorithm::kDistributedSqp;
  double rho = 1e3;
  double tol = 1e-8;
  int max_iter = 50;
  // Curvature of the coordination QP. The local solves and the
  // sensitivity matrices are not affected.
  HessianMode hessian_mode = HessianMode::kGaussNewton;
  LocalSolveConfig local;
  // Shift of the ALADIN coordination Hessians (J^T J is rank deficient) and
  // the first escalation step when a Hessian block fails to factor. <= 0
  // means rho. Distributed SQP always shifts by rho.
  double qp_regularization = 0.0;
  // Sensitivity ALADIN: predictor when the local KKT residual at the new
  // parameters is at most switch_tol, exact local solve otherwise.
  double switch_tol = 1e-1;
  bool exact_first_iteration = true;
  // Include phi(s, xi_old) in the predictor right-hand side.
  bool corrected_predictor = true;
  // false runs exactly max_iter iterations (sweep timing convention).
  bool stop_at_tol = true;
  bool record_timing = true;
  int workers = 1;

  // gn-aladin: rho 25. sa-aladin: rho 1e3, coordination shift 25.
  // dsqp: rho 1e3. centralized: rho 1, where it only damps the Newton
  // step. All Gauss-Newton.
  static SolverConfig defaults(Algorithm algorithm);
  void validate() const;
};

struct IterateState {
  BlockVector x;  // local primal iterates (ALADIN variants)
  BlockVector y;  // output primal iterates
  Vector lambda;
  BlockVector mu;
  int iter = 0;
};

struct ConvergenceRecord {
  int iter = 0;
  double primal_step_inf = 0.0;
  double coupling_inf = 0.0;
  double dynamics_inf = 0.0;
  double stationarity_inf = 0.0;
  double distance_to_reference = -1.0;  // < 0 when no reference was given
  double objective = 0.0;
  double wall_ms = 0.0;   // since the start of the solve
  double local_ms = 0.0;  // local phase of this iteration
  double qp_ms = 0.0;     // coordination phase of this iteration
};

enum class Termination { kContinue, kConverged };

// Converged iff every metric is <= tol (inclusive).
Termination termination_check(const ConvergenceRecord& record,
                              const SolverConfig& cfg);

enum class SolveStatus { kConverged, kMaxIter, kError };
const char* status_name(SolveStatus status);

struct SolveResult {
  Algorithm algorithm = Algorithm::kDistributedSqp;
  int num_windows = 1;
  Trajectory trajectory;
  double objective = 0.0;
  std::vector<ConvergenceRecord> records;
  SolveStatus status = SolveStatus::kMaxIter;
  std::optional<ErrorCode> error;
  std::string message;
  IterateState state;
  int iterations = 0;
  // sensitivity ALADIN bookkeeping; exact solves include the first-iteration
  // solve, which is not counted in `iterations`.
  int exact_local_solves = 0;
  int predictor_steps = 0;
  int predictor_fallbacks = 0;
  int inner_failures = 0;  // local solves that hit inner_max_iter
};

struct RunOptions {
  const Trajectory* reference = nullptr;  // enables distance_to_reference
  const IterateState* warm_start = nullptr;
};

SolveResult run_gauss_newton_aladin(const MheInstance& instance,
                                    const Partition& partition,
                                    const SolverConfig& cfg,
                                    const RunOptions& options = {});
SolveResult run_sensitivity_aladin(const MheInstance& instance,
                                   const Partition& partition,
                                   const SolverConfig& cfg,
                                   const RunOptions& options = {});
SolveResult run_distributed_sqp(const MheInstance& instance,
                                const Partition& partition,
                                const SolverConfig& cfg,
                                const RunOptions& options = {});
SolveResult run_centralized(const MheInstance& instance,
                            const SolverConfig& cfg,
                            const RunOptions& options = {});

// Dispatches on cfg.algorithm; the partition is ignored for centralized.
SolveResult solve(const MheInstance& instance, const Partition& partition,
                  const SolverConfig& cfg, const RunOptions& options = {});

// Start state for a split problem from a centralized solution: primal
// blocks lifted, duals mapped from the single-window multipliers.
IterateState lift_solution(const Trajectory& trajectory,
                           const Vector& central_mu,
                           const Partition& partition);

}  // namespace tsmhe

#endif  // TSMHE_SOLVERS_H_
