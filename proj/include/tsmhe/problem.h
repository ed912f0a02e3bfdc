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

// Centralized MHE problem over the window [l - L, l] and its time-split
// reformulation into N coupled sub-windows.
//
// Sub-window i (0-based) owns the states first_state .. first_state + length
// of the horizon, stacked as X_i = (z_i^a, internal states, z_i^b). The last
// sub-window's terminal block is x_l. Consecutive windows share one boundary
// state, duplicated into both blocks and tied by the coupling rows
//
//   (sum_i A_i X_i)_j = z_j^b - z_{j+1}^a,   j = 0 .. N-2.

#ifndef TSMHE_PROBLEM_H_
#define TSMHE_PROBLEM_H_

#include <memory>
#include <vector>

#include "tsmhe/model.h"

namespace tsmhe {

using Trajectory = std::vector<Vector>;
using BlockVector = std::vector<Vector>;

struct MheInstance {
  std::shared_ptr<const SystemModel> model;
  int horizon = 0;       // L: number of dynamics steps in the window
  int window_start = 0;  // absolute index of the oldest state, l - L
  Trajectory measurements;  // L + 1 outputs
  Trajectory controls;      // L inputs
  Vector prior;             // prior estimate of the oldest state
  Matrix prior_cov;         // P
  Matrix meas_cov;          // V
  Trajectory initial_guess;  // L + 1 states

  // Throws kDimensionMismatch / kInvalidArgument / kNotPositiveDefinite.
  void validate() const;
};

struct SubWindow {
  int first_state = 0;  // offset within the horizon
  int length = 0;       // number of dynamics steps
};

struct Partition {
  int horizon = 0;
  int num_windows = 0;   // N
  int length = 0;        // t, length of windows 0 .. N-2
  int last_length = 0;   // t_N
  int nx = 0;
  int coupling_rows = 0;  // r = (N - 1) nx
  std::vector<SubWindow> windows;

  int num_vars(int i) const { return (windows[i].length + 1) * nx; }
  int num_constraints(int i) const { return windows[i].length * nx; }
  int total_vars() const { return (horizon + num_windows) * nx; }
};

// Throws kInvalidPartition unless 1 <= N <= L.
Partition build_partition(int horizon, int num_windows, int nx);

// One signed nx-by-nx identity block of A_i: rows [row, row + nx) and
// columns [col, col + nx).
struct CouplingPlacement {
  int row = 0;
  int col = 0;
  double sign = 1.0;
};

// Immutable per-window data. Safe to share between workers.
struct SubProblem {
  int index = 0;
  int num_windows = 1;
  std::shared_ptr<const SystemModel> model;
  int nx = 0;
  int ny = 0;
  int first_state = 0;
  int length = 0;
  int coupling_rows = 0;
  bool has_prior = false;
  bool has_terminal_measurement = false;
  Vector prior;
  Matrix prior_weight;  // W_P with W_P^T W_P = P^{-1}
  Matrix meas_weight;   // W_V with W_V^T W_V = V^{-1}
  Trajectory measurements;  // one per measured local state, in order
  Trajectory controls;      // length entries
  std::vector<CouplingPlacement> coupling;

  int num_vars() const { return (length + 1) * nx; }
  int num_constraints() const { return length * nx; }
  int num_measured() const { return length + (has_terminal_measurement ? 1 : 0); }
  int num_residuals() const {
    return (has_prior ? nx : 0) + num_measured() * ny;
  }
  Eigen::Ref<const Vector> state(const Vector& x_block, int k) const {
    return x_block.segment(k * nx, nx);
  }
};

std::vector<SubProblem> split_instance(const MheInstance& instance,
                                       const Partition& partition);

struct ResidualEval {
  Vector residual;  // b_i
  Matrix jacobian;  // d b_i / d X_i
};
ResidualEval eval_residual_stack(const SubProblem& sub, const Vector& x_block);

struct ConstraintEval {
  Vector value;     // F_i
  Matrix jacobian;  // C_i
};
ConstraintEval eval_constraints(const SubProblem& sub, const Vector& x_block);

// J_i = 0.5 ||b_i||^2 and its exact gradient J^T b.
double sub_objective(const SubProblem& sub, const Vector& x_block);
Vector sub_gradient(const SubProblem& sub, const Vector& x_block);

// A_i X_i, A_i^T lambda, and the dense r x |X_i| matrix (for oracles).
Vector apply_coupling(const SubProblem& sub, const Vector& x_block);
Vector apply_coupling_transpose(const SubProblem& sub, const Vector& lambda);
Matrix dense_coupling(const SubProblem& sub);

// Block j is z_j^b - z_{j+1}^a.
Vector coupling_residual(const Partition& partition, const BlockVector& blocks);

BlockVector lift_initial_guess(const Trajectory& trajectory,
                               const Partition& partition);

struct Extraction {
  Trajectory trajectory;
  double max_mismatch = 0.0;  // ||coupling_residual||_inf
};
// Duplicated boundary states are averaged.
Extraction extract_trajectory(const BlockVector& blocks,
                              const Partition& partition);

// Maps centralized dynamics multipliers (one per row of x_{n+1} - f(x_n,u_n),
// n = 0 .. L-1) onto the split problem's (lambda, mu_i).
struct LiftedDuals {
  Vector lambda;
  BlockVector mu;
};
LiftedDuals lift_multipliers(const Vector& central_mu,
                             const Partition& partition);

// Objective of the centralized problem at a trajectory.
double centralized_objective(const MheInstance& instance,
                             const Trajectory& trajectory);

// Independent first-order check of the centralized problem: dynamics
// violation plus the stationarity residual with least-squares optimal
// multipliers, ||grad + C^T nu||_inf.
struct CentralizedKkt {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double max() const { return stationarity > feasibility ? stationarity : feasibility; }
};
CentralizedKkt centralized_kkt_residual(const MheInstance& instance,
                                        const Trajectory& trajectory);

// Largest absolute state-component difference between two trajectories.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

}  // namespace tsmhe

#endif  // TSMHE_PROBLEM_H_
