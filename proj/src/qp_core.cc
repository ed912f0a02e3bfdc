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

#include "tsmhe/qp_core.h"

#include <algorithm>
#include <string>

#include "tsmhe/error.h"
#include "tsmhe/parallel.h"

namespace tsmhe {
namespace {

void check_block_dims(const QpBlock& b, int index, Eigen::Index r) {
  const Eigen::Index n = b.hessian.rows();
  const bool ok = b.hessian.cols() == n && b.gradient.size() == n &&
                  b.constraint_jacobian.cols() == n &&
                  b.constraint_offset.size() == b.constraint_jacobian.rows() &&
                  b.coupling.cols() == n && b.coupling.rows() == r &&
                  b.anchor.size() == r;
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, "QP block shape", index);
}

Eigen::Index coupling_rows(std::span<const QpBlock> blocks) {
  if (blocks.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "QP needs at least one block");
  }
  const Eigen::Index r = blocks[0].coupling.rows();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    check_block_dims(blocks[i], static_cast<int>(i), r);
  }
  return r;
}

}  // namespace

Matrix SchurTerms::schur_contribution() const {
  if (constraint_gram.rows() == 0) return coupling_gram;
  return coupling_gram - cross * constraint_factor.solve(cross.transpose());
}

SchurTerms schur_terms(const QpBlock& block, int block_index,
                       const QpOptions& options) {
  check_block_dims(block, block_index, block.coupling.rows());
  SchurTerms t;
  t.hessian_factor.compute(block.hessian);
  if (t.hessian_factor.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "Hessian block is not positive definite", block_index);
  }
  const Matrix& a = block.coupling;
  const Matrix& c = block.constraint_jacobian;
  t.hinv_coupling_t = t.hessian_factor.solve(a.transpose());
  t.hinv_constraint_t = t.hessian_factor.solve(c.transpose());
  t.hinv_gradient = t.hessian_factor.solve(block.gradient);

  t.coupling_gram = a * t.hinv_coupling_t;
  t.cross = a * t.hinv_constraint_t;
  t.constraint_gram = c * t.hinv_constraint_t;
  t.coupling_gram = 0.5 * (t.coupling_gram + t.coupling_gram.transpose());
  t.constraint_gram = 0.5 * (t.constraint_gram + t.constraint_gram.transpose());

  t.rhs = block.anchor - a * t.hinv_gradient;
  if (c.rows() > 0) {
    t.constraint_factor.compute(t.constraint_gram);
    t.constraint_rcond = t.constraint_factor.info() == Eigen::Success
                             ? t.constraint_factor.rcond()
                             : 0.0;
    if (t.constraint_factor.info() != Eigen::Success ||
        !(t.constraint_rcond >= options.constraint_rcond_min)) {
      throw Error(ErrorCode::kRankDeficientConstraints,
                  "C H^{-1} C^T is singular (rcond " +
                      std::to_string(t.constraint_rcond) + ")",
                  block_index);
    }
    t.rhs += t.cross * t.constraint_factor.solve(c * t.hinv_gradient -
                                                 block.constraint_offset);
  }
  return t;
}

QpSolution solve_coupled_qp(std::span<const QpBlock> blocks,
                            const QpOptions& options) {
  const Eigen::Index r = coupling_rows(blocks);
  const int n = static_cast<int>(blocks.size());

  std::vector<SchurTerms> terms(n);
  parallel_for(n, options.workers, [&](int i) {
    terms[i] = schur_terms(blocks[i], i, options);
  });

  QpSolution sol;
  sol.diagnostics.min_constraint_rcond = 1.0;
  for (const auto& t : terms) {
    sol.diagnostics.min_constraint_rcond =
        std::min(sol.diagnostics.min_constraint_rcond, t.constraint_rcond);
  }

  sol.lambda = Vector::Zero(r);
  if (r > 0) {
    // Fixed summation order keeps runs bit-reproducible.
    Matrix schur = Matrix::Zero(r, r);
    Vector rhs = Vector::Zero(r);
    for (int i = 0; i < n; ++i) {
      schur += terms[i].schur_contribution();
      rhs += terms[i].rhs;
    }
    schur = 0.5 * (schur + schur.transpose());
    Eigen::LLT<Matrix> llt(schur);
    if (llt.info() == Eigen::Success && llt.rcond() >= options.schur_rcond_min) {
      sol.diagnostics.schur_rcond = llt.rcond();
      sol.lambda = llt.solve(rhs);
    } else {
      Eigen::FullPivLU<Matrix> lu(schur);
      sol.diagnostics.schur_fallback = true;
      sol.diagnostics.schur_rcond = lu.rcond();
      if (!lu.isInvertible() || !(lu.rcond() >= options.schur_rcond_min)) {
        throw Error(ErrorCode::kSingularSchur,
                    "coupled Schur complement is singular (rcond " +
                        std::to_string(lu.rcond()) + ")");
      }
      sol.lambda = lu.solve(rhs);
    }
  }

  sol.mu.resize(n);
  sol.delta.resize(n);
  parallel_for(n, options.workers, [&](int i) {
    const QpBlock& b = blocks[i];
    const SchurTerms& t = terms[i];
    if (b.constraint_jacobian.rows() > 0) {
      sol.mu[i] = -t.constraint_factor.solve(
          b.constraint_jacobian * t.hinv_gradient +
          t.cross.transpose() * sol.lambda - b.constraint_offset);
      sol.delta[i] = -(t.hinv_gradient + t.hinv_constraint_t * sol.mu[i] +
                       t.hinv_coupling_t * sol.lambda);
    } else {
      sol.mu[i] = Vector::Zero(0);
      sol.delta[i] = -(t.hinv_gradient + t.hinv_coupling_t * sol.lambda);
    }
  });
  return sol;
}

QpSolution dense_kkt_oracle(std::span<const QpBlock> blocks) {
  const Eigen::Index r = coupling_rows(blocks);
  const std::size_t n = blocks.size();
  Eigen::Index nvar = 0, ncon = 0;
  for (const auto& b : blocks) {
    nvar += b.hessian.rows();
    ncon += b.constraint_jacobian.rows();
  }
  const Eigen::Index dim = nvar + ncon + r;
  Matrix kkt = Matrix::Zero(dim, dim);
  Vector rhs = Vector::Zero(dim);
  Eigen::Index xo = 0, co = nvar;
  const Eigen::Index lo = nvar + ncon;
  for (const auto& b : blocks) {
    const Eigen::Index nx = b.hessian.rows(), nc = b.constraint_jacobian.rows();
    kkt.block(xo, xo, nx, nx) = b.hessian;
    kkt.block(xo, co, nx, nc) = b.constraint_jacobian.transpose();
    kkt.block(co, xo, nc, nx) = b.constraint_jacobian;
    kkt.block(xo, lo, nx, r) = b.coupling.transpose();
    kkt.block(lo, xo, r, nx) = b.coupling;
    rhs.segment(xo, nx) = -b.gradient;
    rhs.segment(co, nc) = -b.constraint_offset;
    rhs.segment(lo, r) -= b.anchor;
    xo += nx;
    co += nc;
  }
  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingularKkt, "assembled KKT matrix is singular");
  }
  const Vector z = lu.solve(rhs);

  QpSolution sol;
  sol.diagnostics.schur_rcond = lu.rcond();
  sol.lambda = z.segment(lo, r);
  sol.mu.resize(n);
  sol.delta.resize(n);
  xo = 0;
  co = nvar;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Index nx = blocks[i].hessian.rows();
    const Eigen::Index nc = blocks[i].constraint_jacobian.rows();
    sol.delta[i] = z.segment(xo, nx);
    sol.mu[i] = z.segment(co, nc);
    xo += nx;
    co += nc;
  }
  return sol;
}

double kkt_residual_qp(std::span<const QpBlock> blocks,
                       const QpSolution& solution) {
  const Eigen::Index r = coupling_rows(blocks);
  if (solution.delta.size() != blocks.size() ||
      solution.mu.size() != blocks.size() || solution.lambda.size() != r) {
    throw Error(ErrorCode::kDimensionMismatch, "QP solution shape");
  }
  double worst = 0.0;
  Vector coupling = Vector::Zero(r);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const QpBlock& b = blocks[i];
    const Vector& dx = solution.delta[i];
    const Vector& mu = solution.mu[i];
    Vector stat = b.hessian * dx + b.gradient + b.coupling.transpose() *
                                                    solution.lambda;
    if (b.constraint_jacobian.rows() > 0) {
      stat += b.constraint_jacobian.transpose() * mu;
      worst = std::max(worst,
                       (b.constraint_jacobian * dx + b.constraint_offset)
                           .lpNorm<Eigen::Infinity>());
    }
    if (stat.size() > 0) worst = std::max(worst, stat.lpNorm<Eigen::Infinity>());
    coupling += b.anchor + b.coupling * dx;
  }
  if (r > 0) worst = std::max(worst, coupling.lpNorm<Eigen::Infinity>());
  return worst;
}

}  // namespace tsmhe
