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

#include "tsmhe/problem.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsmhe/error.h"

namespace tsmhe {
namespace {

void require(bool ok, ErrorCode code, const std::string& message) {
  if (!ok) throw Error(code, message);
}

bool is_symmetric(const Matrix& m) {
  return m.rows() == m.cols() &&
         (m - m.transpose()).lpNorm<Eigen::Infinity>() <=
             1e-12 * (1.0 + m.lpNorm<Eigen::Infinity>());
}

// W with W^T W = cov^{-1}, from the Cholesky factor of the inverse.
Matrix inverse_sqrt_weight(const Matrix& cov, const char* name) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                std::string(name) + " is not positive definite");
  }
  const Matrix inverse = llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
  Eigen::LLT<Matrix> inv_llt(0.5 * (inverse + inverse.transpose()));
  if (inv_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                std::string(name) + " inverse is not positive definite");
  }
  return inv_llt.matrixU();
}

void check_block(const SubProblem& sub, const Vector& x_block) {
  if (x_block.size() != sub.num_vars()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "block has " + std::to_string(x_block.size()) +
                    " entries, expected " + std::to_string(sub.num_vars()),
                sub.index);
  }
}

void check_blocks(const Partition& partition, const BlockVector& blocks) {
  require(static_cast<int>(blocks.size()) == partition.num_windows,
          ErrorCode::kDimensionMismatch, "wrong number of blocks");
  for (int i = 0; i < partition.num_windows; ++i) {
    if (blocks[i].size() != partition.num_vars(i)) {
      throw Error(ErrorCode::kDimensionMismatch, "block size mismatch", i);
    }
  }
}

}  // namespace

void MheInstance::validate() const {
  require(model != nullptr, ErrorCode::kInvalidArgument, "missing model");
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be >= 1");
  const auto nx = model->nx(), nu = model->nu(), ny = model->ny();
  require(static_cast<int>(measurements.size()) == horizon + 1,
          ErrorCode::kDimensionMismatch, "need L + 1 measurements");
  require(static_cast<int>(controls.size()) == horizon,
          ErrorCode::kDimensionMismatch, "need L controls");
  require(static_cast<int>(initial_guess.size()) == horizon + 1,
          ErrorCode::kDimensionMismatch, "need L + 1 initial guess states");
  for (const auto& y : measurements) {
    require(y.size() == ny, ErrorCode::kDimensionMismatch,
            "measurement dimension");
  }
  for (const auto& u : controls) {
    require(u.size() == nu, ErrorCode::kDimensionMismatch, "control dimension");
  }
  for (const auto& x : initial_guess) {
    require(x.size() == nx, ErrorCode::kDimensionMismatch, "guess dimension");
  }
  require(prior.size() == nx, ErrorCode::kDimensionMismatch, "prior dimension");
  require(prior_cov.rows() == nx && meas_cov.rows() == ny,
          ErrorCode::kDimensionMismatch, "covariance dimension");
  require(is_symmetric(prior_cov) && is_symmetric(meas_cov),
          ErrorCode::kInvalidArgument, "covariances must be symmetric");
  require(prior_cov.llt().info() == Eigen::Success &&
              meas_cov.llt().info() == Eigen::Success,
          ErrorCode::kNotPositiveDefinite,
          "covariances must be positive definite");
}

Partition build_partition(int horizon, int num_windows, int nx) {
  if (num_windows < 1 || num_windows > horizon) {
    throw Error(ErrorCode::kInvalidPartition,
                "need 1 <= N <= L, got N=" + std::to_string(num_windows) +
                    " L=" + std::to_string(horizon));
  }
  require(nx >= 1, ErrorCode::kInvalidArgument, "nx must be >= 1");
  Partition p;
  p.horizon = horizon;
  p.num_windows = num_windows;
  p.length = horizon / num_windows;
  p.last_length = horizon - (num_windows - 1) * p.length;
  p.nx = nx;
  p.coupling_rows = (num_windows - 1) * nx;
  p.windows.resize(num_windows);
  for (int i = 0; i < num_windows; ++i) {
    p.windows[i].first_state = i * p.length;
    p.windows[i].length = (i + 1 < num_windows) ? p.length : p.last_length;
  }
  return p;
}

std::vector<SubProblem> split_instance(const MheInstance& instance,
                                       const Partition& partition) {
  instance.validate();
  const int nx = instance.model->nx();
  if (partition.horizon != instance.horizon || partition.nx != nx) {
    throw Error(ErrorCode::kDimensionMismatch,
                "partition was built for a different instance");
  }
  const Matrix prior_weight =
      inverse_sqrt_weight(instance.prior_cov, "prior covariance");
  const Matrix meas_weight =
      inverse_sqrt_weight(instance.meas_cov, "measurement covariance");

  const int n = partition.num_windows;
  std::vector<SubProblem> subs(n);
  for (int i = 0; i < n; ++i) {
    SubProblem& s = subs[i];
    s.index = i;
    s.num_windows = n;
    s.model = instance.model;
    s.nx = nx;
    s.ny = instance.model->ny();
    s.first_state = partition.windows[i].first_state;
    s.length = partition.windows[i].length;
    s.coupling_rows = partition.coupling_rows;
    s.has_prior = (i == 0);
    s.has_terminal_measurement = (i == n - 1);
    if (s.has_prior) {
      s.prior = instance.prior;
      s.prior_weight = prior_weight;
    }
    s.meas_weight = meas_weight;
    for (int k = 0; k < s.num_measured(); ++k) {
      s.measurements.push_back(instance.measurements[s.first_state + k]);
    }
    for (int k = 0; k < s.length; ++k) {
      s.controls.push_back(instance.controls[s.first_state + k]);
    }
    if (i + 1 < n) s.coupling.push_back({i * nx, s.length * nx, 1.0});
    if (i > 0) s.coupling.push_back({(i - 1) * nx, 0, -1.0});
  }
  return subs;
}

ResidualEval eval_residual_stack(const SubProblem& sub, const Vector& x_block) {
  check_block(sub, x_block);
  const int nx = sub.nx, ny = sub.ny;
  ResidualEval out;
  out.residual = Vector::Zero(sub.num_residuals());
  out.jacobian = Matrix::Zero(sub.num_residuals(), sub.num_vars());
  int row = 0;
  if (sub.has_prior) {
    out.residual.segment(0, nx) =
        sub.prior_weight * (x_block.head(nx) - sub.prior);
    out.jacobian.block(0, 0, nx, nx) = sub.prior_weight;
    row = nx;
  }
  for (int k = 0; k < sub.num_measured(); ++k) {
    const Vector x = sub.state(x_block, k);
    out.residual.segment(row, ny) =
        sub.meas_weight * (sub.model->h(x) - sub.measurements[k]);
    out.jacobian.block(row, k * nx, ny, nx) =
        sub.meas_weight * sub.model->dh_dx(x);
    row += ny;
  }
  return out;
}

ConstraintEval eval_constraints(const SubProblem& sub, const Vector& x_block) {
  check_block(sub, x_block);
  const int nx = sub.nx;
  ConstraintEval out;
  out.value = Vector::Zero(sub.num_constraints());
  out.jacobian = Matrix::Zero(sub.num_constraints(), sub.num_vars());
  for (int k = 0; k < sub.length; ++k) {
    const Vector x = sub.state(x_block, k);
    out.value.segment(k * nx, nx) =
        sub.state(x_block, k + 1) - sub.model->f(x, sub.controls[k]);
    out.jacobian.block(k * nx, k * nx, nx, nx) =
        -sub.model->df_dx(x, sub.controls[k]);
    out.jacobian.block(k * nx, (k + 1) * nx, nx, nx).setIdentity();
  }
  return out;
}

double sub_objective(const SubProblem& sub, const Vector& x_block) {
  return 0.5 * eval_residual_stack(sub, x_block).residual.squaredNorm();
}

Vector sub_gradient(const SubProblem& sub, const Vector& x_block) {
  const ResidualEval r = eval_residual_stack(sub, x_block);
  return r.jacobian.transpose() * r.residual;
}

Vector apply_coupling(const SubProblem& sub, const Vector& x_block) {
  check_block(sub, x_block);
  Vector out = Vector::Zero(sub.coupling_rows);
  for (const auto& c : sub.coupling) {
    out.segment(c.row, sub.nx) += c.sign * x_block.segment(c.col, sub.nx);
  }
  return out;
}

Vector apply_coupling_transpose(const SubProblem& sub, const Vector& lambda) {
  if (lambda.size() != sub.coupling_rows) {
    throw Error(ErrorCode::kDimensionMismatch, "lambda size", sub.index);
  }
  Vector out = Vector::Zero(sub.num_vars());
  for (const auto& c : sub.coupling) {
    out.segment(c.col, sub.nx) += c.sign * lambda.segment(c.row, sub.nx);
  }
  return out;
}

Matrix dense_coupling(const SubProblem& sub) {
  Matrix a = Matrix::Zero(sub.coupling_rows, sub.num_vars());
  for (const auto& c : sub.coupling) {
    a.block(c.row, c.col, sub.nx, sub.nx) =
        c.sign * Matrix::Identity(sub.nx, sub.nx);
  }
  return a;
}

Vector coupling_residual(const Partition& partition, const BlockVector& blocks) {
  check_blocks(partition, blocks);
  const int nx = partition.nx;
  Vector out(partition.coupling_rows);
  for (int j = 0; j + 1 < partition.num_windows; ++j) {
    const int tail = partition.windows[j].length * nx;
    out.segment(j * nx, nx) =
        blocks[j].segment(tail, nx) - blocks[j + 1].head(nx);
  }
  return out;
}

BlockVector lift_initial_guess(const Trajectory& trajectory,
                               const Partition& partition) {
  require(static_cast<int>(trajectory.size()) == partition.horizon + 1,
          ErrorCode::kDimensionMismatch, "trajectory needs L + 1 states");
  const int nx = partition.nx;
  BlockVector blocks(partition.num_windows);
  for (int i = 0; i < partition.num_windows; ++i) {
    const SubWindow& w = partition.windows[i];
    blocks[i].resize(partition.num_vars(i));
    for (int k = 0; k <= w.length; ++k) {
      require(trajectory[w.first_state + k].size() == nx,
              ErrorCode::kDimensionMismatch, "state dimension");
      blocks[i].segment(k * nx, nx) = trajectory[w.first_state + k];
    }
  }
  return blocks;
}

Extraction extract_trajectory(const BlockVector& blocks,
                              const Partition& partition) {
  check_blocks(partition, blocks);
  const int nx = partition.nx;
  Extraction out;
  out.trajectory.resize(partition.horizon + 1);
  for (int i = 0; i < partition.num_windows; ++i) {
    const SubWindow& w = partition.windows[i];
    // The terminal block of window i < N-1 is averaged in by window i+1.
    const int last = (i + 1 < partition.num_windows) ? w.length - 1 : w.length;
    for (int k = 0; k <= last; ++k) {
      Vector x = blocks[i].segment(k * nx, nx);
      if (k == 0 && i > 0) {
        const SubWindow& prev = partition.windows[i - 1];
        x = 0.5 * (x + blocks[i - 1].segment(prev.length * nx, nx));
      }
      out.trajectory[w.first_state + k] = x;
    }
  }
  out.max_mismatch = partition.coupling_rows > 0
                         ? coupling_residual(partition, blocks)
                               .lpNorm<Eigen::Infinity>()
                         : 0.0;
  return out;
}

LiftedDuals lift_multipliers(const Vector& central_mu,
                             const Partition& partition) {
  const int nx = partition.nx;
  require(central_mu.size() == partition.horizon * nx,
          ErrorCode::kDimensionMismatch, "centralized multiplier size");
  LiftedDuals out;
  out.lambda = Vector::Zero(partition.coupling_rows);
  out.mu.resize(partition.num_windows);
  for (int i = 0; i < partition.num_windows; ++i) {
    const SubWindow& w = partition.windows[i];
    out.mu[i] = central_mu.segment(w.first_state * nx, w.length * nx);
    if (i + 1 < partition.num_windows) {
      // Stationarity in z_i^b: mu_i(last) + lambda_i = 0.
      out.lambda.segment(i * nx, nx) = -out.mu[i].tail(nx);
    }
  }
  return out;
}

double centralized_objective(const MheInstance& instance,
                             const Trajectory& trajectory) {
  instance.validate();
  require(static_cast<int>(trajectory.size()) == instance.horizon + 1,
          ErrorCode::kDimensionMismatch, "trajectory needs L + 1 states");
  const auto p_ldlt = instance.prior_cov.ldlt();
  const auto v_ldlt = instance.meas_cov.ldlt();
  const Vector e0 = trajectory[0] - instance.prior;
  double value = 0.5 * e0.dot(p_ldlt.solve(e0));
  for (int n = 0; n <= instance.horizon; ++n) {
    const Vector e = instance.model->h(trajectory[n]) - instance.measurements[n];
    value += 0.5 * e.dot(v_ldlt.solve(e));
  }
  return value;
}

CentralizedKkt centralized_kkt_residual(const MheInstance& instance,
                                        const Trajectory& trajectory) {
  instance.validate();
  const int L = instance.horizon;
  const int nx = instance.model->nx();
  require(static_cast<int>(trajectory.size()) == L + 1,
          ErrorCode::kDimensionMismatch, "trajectory needs L + 1 states");
  const auto& model = *instance.model;
  const auto p_ldlt = instance.prior_cov.ldlt();
  const auto v_ldlt = instance.meas_cov.ldlt();

  Vector grad = Vector::Zero((L + 1) * nx);
  grad.head(nx) = p_ldlt.solve(trajectory[0] - instance.prior);
  for (int n = 0; n <= L; ++n) {
    const Vector e = model.h(trajectory[n]) - instance.measurements[n];
    grad.segment(n * nx, nx) += model.dh_dx(trajectory[n]).transpose() *
                                v_ldlt.solve(e);
  }
  Matrix jac = Matrix::Zero(L * nx, (L + 1) * nx);
  Vector violation(L * nx);
  for (int n = 0; n < L; ++n) {
    violation.segment(n * nx, nx) =
        trajectory[n + 1] - model.f(trajectory[n], instance.controls[n]);
    jac.block(n * nx, n * nx, nx, nx) =
        -model.df_dx(trajectory[n], instance.controls[n]);
    jac.block(n * nx, (n + 1) * nx, nx, nx).setIdentity();
  }
  const Vector nu = jac.transpose().colPivHouseholderQr().solve(-grad);
  CentralizedKkt out;
  out.stationarity = (grad + jac.transpose() * nu).lpNorm<Eigen::Infinity>();
  out.feasibility = violation.lpNorm<Eigen::Infinity>();
  return out;
}

double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch,
          "trajectory lengths differ");
  double worst = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    worst = std::max(worst, (a[n] - b[n]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace tsmhe
