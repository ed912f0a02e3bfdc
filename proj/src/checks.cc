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

#include "tsmhe/checks.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsmhe/harness.h"
#include "tsmhe/problem.h"

namespace tsmhe {
namespace {

Matrix gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

Vector gaussian_vector(std::mt19937_64& rng, int n) {
  return gaussian_matrix(rng, n, 1).col(0);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double relative_inf(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - b).lpNorm<Eigen::Infinity>() /
         std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace

std::vector<QpBlock> random_coupled_qp(std::mt19937_64& rng,
                                       const RandomQpShape& shape) {
  const int n = uniform_int(rng, shape.min_blocks, shape.max_blocks);
  std::vector<int> vars(n), cons(n);
  int free_dims = 0;
  for (int i = 0; i < n; ++i) {
    vars[i] = uniform_int(rng, shape.min_vars, shape.max_vars);
    cons[i] = uniform_int(rng, shape.allow_empty_constraints ? 0 : 1,
                          vars[i] - 1);
    free_dims += vars[i] - cons[i];
  }
  const int r = uniform_int(rng, shape.allow_empty_coupling ? 0 : 1,
                            std::min(free_dims, 3 * n));
  std::vector<QpBlock> blocks(n);
  for (int i = 0; i < n; ++i) {
    QpBlock& b = blocks[i];
    const Matrix m = gaussian_matrix(rng, vars[i], vars[i]);
    b.hessian = m.transpose() * m;
    b.hessian.diagonal().array() += 0.5;
    b.gradient = gaussian_vector(rng, vars[i]);
    b.constraint_jacobian = gaussian_matrix(rng, cons[i], vars[i]);
    b.constraint_offset = gaussian_vector(rng, cons[i]);
    b.coupling = gaussian_matrix(rng, r, vars[i]);
    b.anchor = gaussian_vector(rng, r);
  }
  return blocks;
}

double qp_relative_error(const QpSolution& a, const QpSolution& b) {
  double worst = relative_inf(a.lambda, b.lambda);
  if (a.mu.size() != b.mu.size() || a.delta.size() != b.delta.size()) {
    return std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < a.mu.size(); ++i) {
    worst = std::max(worst, relative_inf(a.mu[i], b.mu[i]));
    worst = std::max(worst, relative_inf(a.delta[i], b.delta[i]));
  }
  return worst;
}

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;

  const DiffDriveRobot robot;
  out.push_back({"robot derivatives vs finite differences",
                 fd_check(robot, 50, 1e-6, seed), 1e-6});

  std::mt19937_64 rng(seed);
  double qp_worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto blocks = random_coupled_qp(rng);
    qp_worst = std::max(qp_worst, qp_relative_error(solve_coupled_qp(blocks),
                                                    dense_kkt_oracle(blocks)));
  }
  out.push_back({"closed-form QP vs dense KKT (100 instances)", qp_worst, 1e-9});

  // Split identities on the default benchmark window.
  const Scenario scenario = generate_scenario(ScenarioConfig{});
  EstimatorConfig cfg;
  const MheInstance inst =
      make_window_instance(scenario, cfg.horizon, cfg);
  Trajectory truth(scenario.true_states.begin(),
                   scenario.true_states.begin() + cfg.horizon + 1);
  double objective_err = 0.0, constraint_err = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const Partition p = build_partition(inst.horizon, n, 3);
    const auto subs = split_instance(inst, p);
    for (const Trajectory& traj : {truth, inst.initial_guess}) {
      const BlockVector lifted = lift_initial_guess(traj, p);
      double split = 0.0, split_dyn = 0.0;
      for (int i = 0; i < n; ++i) {
        split += sub_objective(subs[i], lifted[i]);
        split_dyn = std::max(
            split_dyn,
            eval_constraints(subs[i], lifted[i]).value.lpNorm<Eigen::Infinity>());
      }
      const double central = centralized_objective(inst, traj);
      objective_err = std::max(objective_err, std::abs(split - central) /
                                                  std::max(1.0, std::abs(central)));
      double central_dyn = 0.0;
      for (int k = 0; k < inst.horizon; ++k) {
        central_dyn = std::max(
            central_dyn, (inst.model->f(traj[k], inst.controls[k]) - traj[k + 1])
                             .lpNorm<Eigen::Infinity>());
      }
      constraint_err = std::max(constraint_err, std::abs(split_dyn - central_dyn));
    }
  }
  out.push_back({"split objective vs centralized", objective_err, 1e-12});
  out.push_back({"split dynamics vs centralized", constraint_err, 1e-12});
  return out;
}

}  // namespace tsmhe
