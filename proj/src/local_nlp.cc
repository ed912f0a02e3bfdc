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

#include "tsmhe/local_nlp.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tsmhe/error.h"
#include "tsmhe/qp_core.h"

namespace tsmhe {
namespace {

constexpr int kMaxHalvings = 30;
constexpr int kMaxEscalations = 3;

double augmented_objective(const SubProblem& sub, const Vector& x,
                           const Vector& lambda, const Vector& y, double rho) {
  return sub_objective(sub, x) + lambda.dot(apply_coupling(sub, x)) +
         0.5 * rho * (x - y).squaredNorm();
}

// Adds the residual and constraint curvature terms to `hess`.
void add_curvature(const SubProblem& sub, const Vector& x_block,
                   const Vector& residual, const Vector& mu, Matrix& hess) {
  const int nx = sub.nx, ny = sub.ny;
  int row = sub.has_prior ? nx : 0;  // prior residual is affine
  for (int k = 0; k < sub.num_measured(); ++k) {
    const Vector w = sub.meas_weight.transpose() * residual.segment(row, ny);
    hess.block(k * nx, k * nx, nx, nx) += sub.model->d2h(sub.state(x_block, k), w);
    row += ny;
  }
  for (int k = 0; k < sub.length; ++k) {
    hess.block(k * nx, k * nx, nx, nx) -= sub.model->d2f(
        sub.state(x_block, k), sub.controls[k], mu.segment(k * nx, nx));
  }
}

}  // namespace

Vector kkt_vector(const SubProblem& sub, const Vector& x_block,
                  const Vector& mu, const Vector& lambda,
                  const Vector& y_block, double rho) {
  if (mu.size() != sub.num_constraints() || y_block.size() != sub.num_vars()) {
    throw Error(ErrorCode::kDimensionMismatch, "local KKT arguments", sub.index);
  }
  const ResidualEval r = eval_residual_stack(sub, x_block);
  const ConstraintEval c = eval_constraints(sub, x_block);
  Vector phi(sub.num_vars() + sub.num_constraints());
  phi.head(sub.num_vars()) = r.jacobian.transpose() * r.residual +
                             apply_coupling_transpose(sub, lambda) +
                             rho * (x_block - y_block) +
                             c.jacobian.transpose() * mu;
  phi.tail(sub.num_constraints()) = c.value;
  return phi;
}

double kkt_residual(const SubProblem& sub, const Vector& x_block,
                    const Vector& mu, const Vector& lambda,
                    const Vector& y_block, double rho) {
  return kkt_vector(sub, x_block, mu, lambda, y_block, rho)
      .lpNorm<Eigen::Infinity>();
}

Matrix lagrangian_hessian(const SubProblem& sub, const Vector& x_block,
                          const Vector& mu, double rho, HessianMode mode) {
  const ResidualEval r = eval_residual_stack(sub, x_block);
  Matrix hess = r.jacobian.transpose() * r.jacobian;
  hess.diagonal().array() += rho;
  if (mode == HessianMode::kExactLagrangian) {
    if (mu.size() != sub.num_constraints()) {
      throw Error(ErrorCode::kDimensionMismatch, "mu size", sub.index);
    }
    add_curvature(sub, x_block, r.residual, mu, hess);
  }
  return 0.5 * (hess + hess.transpose());
}

LocalSolution solve_local_subproblem(const SubProblem& sub,
                                     const Vector& lambda,
                                     const Vector& y_block, double rho,
                                     const LocalSolveConfig& cfg,
                                     const std::optional<Vector>& x_start,
                                     const std::optional<Vector>& mu_start) {
  if (!(rho > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rho must be positive", sub.index);
  }
  if (y_block.size() != sub.num_vars() || lambda.size() != sub.coupling_rows) {
    throw Error(ErrorCode::kDimensionMismatch, "local solve arguments",
                sub.index);
  }
  const double eps0 = cfg.eps_h > 0.0 ? cfg.eps_h : rho;

  LocalSolution out;
  out.x = x_start.value_or(y_block);
  out.mu = mu_start.value_or(Vector::Zero(sub.num_constraints()));
  Vector x = out.x, mu = out.mu;
  const Vector coupling_grad = apply_coupling_transpose(sub, lambda);
  double best = kkt_residual(sub, x, mu, lambda, y_block, rho);
  out.kkt_residual = best;
  if (best <= cfg.inner_tol) {
    out.converged = true;
    return out;
  }

  for (int it = 1; it <= cfg.inner_max_iter; ++it) {
    const ResidualEval r = eval_residual_stack(sub, x);
    const ConstraintEval c = eval_constraints(sub, x);

    std::array<QpBlock, 1> qp;
    QpBlock& block = qp[0];
    block.hessian = r.jacobian.transpose() * r.jacobian;
    block.hessian.diagonal().array() += rho;
    if (cfg.hessian_mode == HessianMode::kExactLagrangian) {
      add_curvature(sub, x, r.residual, mu, block.hessian);
      block.hessian = 0.5 * (block.hessian + block.hessian.transpose());
    }
    block.gradient = r.jacobian.transpose() * r.residual + coupling_grad +
                     rho * (x - y_block);
    block.constraint_jacobian = c.jacobian;
    block.constraint_offset = c.value;
    block.coupling = Matrix::Zero(0, sub.num_vars());
    block.anchor = Vector::Zero(0);

    QpSolution step;
    for (int attempt = 0;; ++attempt) {
      try {
        step = solve_coupled_qp(qp);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNotPositiveDefinite ||
            attempt >= kMaxEscalations) {
          throw Error(ErrorCode::kFactorizationFailure,
                      std::string("local KKT system: ") + e.what(), sub.index);
        }
        block.hessian.diagonal().array() += eps0 * std::pow(10.0, attempt);
        ++out.regularizations;
      }
    }

    // l1 merit; nu > ||mu||_inf makes the SQP step a descent direction.
    const double nu = 2.0 * step.mu[0].lpNorm<Eigen::Infinity>() + 1.0;
    auto merit = [&](const Vector& z) {
      return augmented_objective(sub, z, lambda, y_block, rho) +
             nu * eval_constraints(sub, z).value.lpNorm<1>();
    };
    const double m0 = merit(x);
    const double slack = 1e-12 * std::max(1.0, std::abs(m0));
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= kMaxHalvings; ++k, alpha *= 0.5) {
      double m1;
      try {
        m1 = merit(x + alpha * step.delta[0]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kOriginSingularity) throw;
        m1 = std::numeric_limits<double>::infinity();
      }
      if (m1 <= m0 + slack) {
        accepted = true;
        break;
      }
    }
    out.iterations = it;
    if (!accepted) break;
    x += alpha * step.delta[0];
    mu = step.mu[0];

    const double res = kkt_residual(sub, x, mu, lambda, y_block, rho);
    if (res < best) {
      best = res;
      out.x = x;
      out.mu = mu;
    }
    if (res <= cfg.inner_tol) {
      out.converged = true;
      break;
    }
  }
  out.kkt_residual = best;
  return out;
}

SensitivityPair sensitivity_matrices(const SubProblem& sub,
                                     const Vector& x_block, const Vector& mu,
                                     const Vector& /*lambda*/,
                                     const Vector& /*y_block*/, double rho) {
  const int nv = sub.num_vars(), nc = sub.num_constraints(),
            r = sub.coupling_rows;
  const ConstraintEval c = eval_constraints(sub, x_block);
  SensitivityPair pair;
  pair.m = Matrix::Zero(nv + nc, nv + nc);
  pair.m.topLeftCorner(nv, nv) =
      lagrangian_hessian(sub, x_block, mu, rho, HessianMode::kExactLagrangian);
  pair.m.topRightCorner(nv, nc) = c.jacobian.transpose();
  pair.m.bottomLeftCorner(nc, nv) = c.jacobian;
  pair.n = Matrix::Zero(nv + nc, nv + r);
  pair.n.topLeftCorner(nv, nv).diagonal().setConstant(-rho);
  pair.n.topRightCorner(nv, r) = dense_coupling(sub).transpose();
  return pair;
}

Vector tangent_predictor(const Vector& s, const Vector& xi_old,
                         const Vector& xi_new, const SensitivityPair& pair,
                         const std::optional<Vector>& residual) {
  if (s.size() != pair.m.rows() || xi_old.size() != pair.n.cols() ||
      xi_new.size() != pair.n.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "tangent predictor arguments");
  }
  Eigen::FullPivLU<Matrix> lu(pair.m);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingularKkt, "sensitivity KKT matrix is singular");
  }
  Vector rhs = pair.n * (xi_new - xi_old);
  if (residual) rhs += *residual;
  return s - lu.solve(rhs);
}

}  // namespace tsmhe
