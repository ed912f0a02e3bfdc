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

#include <random>

#include <gtest/gtest.h>

#include "tsmhe/checks.h"
#include "tsmhe/error.h"
#include "test_util.h"

namespace tsmhe {
namespace {

using testing::inf_norm;
using testing::vec;

Matrix mat(int rows, int cols, std::initializer_list<double> v) {
  Matrix m(rows, cols);
  auto it = v.begin();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  }
  return m;
}

QpBlock block(Matrix h, Vector g, Matrix a, Vector anchor,
              Matrix c = Matrix(), Vector d = Vector()) {
  QpBlock b;
  b.constraint_jacobian = c.size() == 0 ? Matrix::Zero(0, h.cols()) : c;
  b.constraint_offset = d.size() == 0 ? Vector::Zero(b.constraint_jacobian.rows()) : d;
  b.hessian = std::move(h);
  b.gradient = std::move(g);
  b.coupling = std::move(a);
  b.anchor = std::move(anchor);
  return b;
}

// Two scalar blocks tied by x1 - x2 = 0, starting from a mismatch of 2.
std::vector<QpBlock> scalar_case() {
  return {block(mat(1, 1, {1}), vec({0}), mat(1, 1, {1}), vec({2})),
          block(mat(1, 1, {1}), vec({0}), mat(1, 1, {-1}), vec({0}))};
}

ErrorCode code_of(const std::function<void()>& fn, int* block_index = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (block_index != nullptr) *block_index = e.block();
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(SolveCoupledQp, ScalarCase) {
  const auto blocks = scalar_case();
  for (const QpSolution& s : {solve_coupled_qp(blocks), dense_kkt_oracle(blocks)}) {
    ASSERT_EQ(s.lambda.size(), 1);
    EXPECT_NEAR(s.lambda(0), 1.0, 1e-15);
    EXPECT_NEAR(s.delta[0](0), -1.0, 1e-15);
    EXPECT_NEAR(s.delta[1](0), 1.0, 1e-15);
    EXPECT_EQ(s.mu[0].size(), 0);
  }
}

TEST(SolveCoupledQp, StationaryFeasiblePointStays) {
  std::mt19937_64 rng(1);
  const Matrix a1 = testing::random_matrix(rng, 3, 5);
  const Matrix a2 = testing::random_matrix(rng, 3, 4);
  const Vector x1 = testing::random_vector(rng, 5);
  // Pick x2 so that A1 x1 + A2 x2 = 0.
  const Vector x2 = a2.completeOrthogonalDecomposition().solve(-a1 * x1);
  std::vector<QpBlock> blocks = {
      block(testing::random_spd(rng, 5), Vector::Zero(5), a1, a1 * x1,
            testing::random_matrix(rng, 2, 5), Vector::Zero(2)),
      block(testing::random_spd(rng, 4), Vector::Zero(4), a2, a2 * x2)};
  const QpSolution s = solve_coupled_qp(blocks);
  EXPECT_LE(inf_norm(s.lambda), 1e-14);
  EXPECT_LE(inf_norm(s.mu[0]), 1e-14);
  EXPECT_LE(inf_norm(s.delta[0]), 1e-14);
  EXPECT_LE(inf_norm(s.delta[1]), 1e-14);
}

TEST(SchurTerms, IdentityHessianWithoutConstraints) {
  std::mt19937_64 rng(2);
  const Matrix a = testing::random_matrix(rng, 3, 6);
  const Vector g = testing::random_vector(rng, 6);
  const Vector anchor = testing::random_vector(rng, 3);
  const SchurTerms t =
      schur_terms(block(Matrix::Identity(6, 6), g, a, anchor));
  EXPECT_LE(inf_norm(Matrix(t.coupling_gram - a * a.transpose())), 1e-14);
  EXPECT_EQ(t.cross.cols(), 0);
  EXPECT_EQ(t.constraint_gram.size(), 0);
  EXPECT_LE(inf_norm(Vector(t.rhs - (anchor - a * g))), 1e-14);
}

TEST(SchurTerms, MatchDenseInverse) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial % 9, m = 1 + trial % (n - 1), r = 1 + trial % 5;
    const Matrix h = testing::random_spd(rng, n);
    const Matrix c = testing::random_matrix(rng, m, n);
    const Matrix a = testing::random_matrix(rng, r, n);
    const Vector g = testing::random_vector(rng, n);
    const Vector d = testing::random_vector(rng, m);
    const Vector anchor = testing::random_vector(rng, r);
    const SchurTerms t = schur_terms(block(h, g, a, anchor, c, d));
    const Matrix hinv = h.inverse();
    const Matrix G = a * hinv * a.transpose();
    const Matrix Q = a * hinv * c.transpose();
    const Matrix R = c * hinv * c.transpose();
    const Vector s = anchor - a * hinv * g + Q * R.inverse() * (c * hinv * g - d);
    EXPECT_LE(testing::relative_error(t.coupling_gram, G), 1e-10);
    EXPECT_LE(testing::relative_error(t.cross, Q), 1e-10);
    EXPECT_LE(testing::relative_error(t.constraint_gram, R), 1e-10);
    EXPECT_LE(testing::relative_error(t.rhs, s), 1e-10);
    EXPECT_LE(testing::relative_error(t.schur_contribution(),
                                      G - Q * R.inverse() * Q.transpose()),
              1e-10);
  }
}

TEST(SchurTerms, ZeroOffsetReducesToGradientTerm) {
  std::mt19937_64 rng(4);
  const Matrix h = testing::random_spd(rng, 7);
  const Matrix c = testing::random_matrix(rng, 3, 7);
  const Matrix a = testing::random_matrix(rng, 2, 7);
  const Vector g = testing::random_vector(rng, 7);
  const Vector anchor = testing::random_vector(rng, 2);
  const SchurTerms t = schur_terms(block(h, g, a, anchor, c, Vector::Zero(3)));
  const Matrix hinv = h.inverse();
  const Matrix Q = a * hinv * c.transpose();
  const Matrix R = c * hinv * c.transpose();
  const Vector q = anchor - a * hinv * g + Q * R.inverse() * c * hinv * g;
  EXPECT_LE(testing::relative_error(t.rhs, q), 1e-10);
}

TEST(SolveCoupledQp, RandomInstancesMatchDenseOracle) {
  std::mt19937_64 rng(5);
  int empty_constraints = 0, empty_coupling = 0;
  double worst = 0.0, worst_kkt = 0.0;
  for (int k = 0; k < 150; ++k) {
    RandomQpShape shape;
    // Force the degenerate families into the mix.
    if (k % 10 == 0) shape.max_blocks = shape.min_blocks;
    std::vector<QpBlock> blocks = random_coupled_qp(rng, shape);
    if (k % 7 == 0) {
      for (auto& b : blocks) {
        b.constraint_jacobian.resize(0, b.hessian.cols());
        b.constraint_offset.resize(0);
      }
    }
    if (k % 11 == 0) {
      for (auto& b : blocks) {
        b.coupling.resize(0, b.hessian.cols());
        b.anchor.resize(0);
      }
    }
    for (const auto& b : blocks) {
      if (b.constraint_jacobian.rows() == 0) ++empty_constraints;
    }
    if (blocks[0].coupling.rows() == 0) ++empty_coupling;
    const QpSolution closed = solve_coupled_qp(blocks);
    const QpSolution dense = dense_kkt_oracle(blocks);
    worst = std::max(worst, qp_relative_error(closed, dense));
    worst_kkt = std::max(worst_kkt, kkt_residual_qp(blocks, closed));
  }
  EXPECT_LE(worst, 1e-9);
  EXPECT_LE(worst_kkt, 1e-9);
  EXPECT_GT(empty_constraints, 10);
  EXPECT_GT(empty_coupling, 5);
}

TEST(SolveCoupledQp, SolutionIsFeasible) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const auto blocks = random_coupled_qp(rng);
    const QpSolution s = solve_coupled_qp(blocks);
    Vector coupled = Vector::Zero(blocks[0].anchor.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      EXPECT_LE(inf_norm(Vector(b.constraint_jacobian * s.delta[i] + b.constraint_offset)),
                1e-9);
      coupled += b.anchor + b.coupling * s.delta[i];
    }
    EXPECT_LE(inf_norm(coupled), 1e-9);
  }
}

TEST(SolveCoupledQp, ParallelWorkersAreBitIdentical) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const auto blocks = random_coupled_qp(rng);
    QpOptions par;
    par.workers = 3;
    const QpSolution a = solve_coupled_qp(blocks);
    const QpSolution b = solve_coupled_qp(blocks, par);
    EXPECT_EQ(a.lambda, b.lambda);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      EXPECT_EQ(a.delta[i], b.delta[i]);
      EXPECT_EQ(a.mu[i], b.mu[i]);
    }
  }
}

TEST(SolveCoupledQp, UncoupledBlocksSolveIndependently) {
  const Matrix h = mat(2, 2, {2, 0, 0, 4});
  const std::vector<QpBlock> blocks = {
      block(h, vec({2, 4}), Matrix::Zero(0, 2), Vector::Zero(0)),
      block(h, vec({1, 1}), Matrix::Zero(0, 2), Vector::Zero(0),
            mat(1, 2, {1, 1}), vec({-1}))};
  const QpSolution s = solve_coupled_qp(blocks);
  EXPECT_EQ(s.lambda.size(), 0);
  EXPECT_LE(inf_norm(Vector(s.delta[0] - vec({-1, -1}))), 1e-15);
  // min x^2 + 2y^2 + x + y  s.t. x + y = 1  ->  x = 2/3, y = 1/3.
  EXPECT_LE(inf_norm(Vector(s.delta[1] - vec({2.0 / 3, 1.0 / 3}))), 1e-15);
}

TEST(DenseOracle, OwnResidualIsTiny) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const auto blocks = random_coupled_qp(rng);
    double scale = 1.0;
    for (const auto& b : blocks) {
      scale = std::max({scale, inf_norm(b.hessian), inf_norm(b.gradient)});
    }
    EXPECT_LE(kkt_residual_qp(blocks, dense_kkt_oracle(blocks)), 1e-12 * scale);
  }
}

TEST(KktResidual, GrowsWithLambdaPerturbation) {
  std::mt19937_64 rng(9);
  RandomQpShape shape;
  shape.allow_empty_coupling = false;
  const auto blocks = random_coupled_qp(rng, shape);
  const QpSolution s = solve_coupled_qp(blocks);
  for (double delta : {1e-2, 1e-4, 1e-6}) {
    QpSolution p = s;
    p.lambda.array() += delta;
    // A_i^T 1 is dense for Gaussian A_i, so every stationarity row moves.
    double expect = 0.0;
    for (const auto& b : blocks) {
      expect = std::max(expect, inf_norm(Vector(b.coupling.transpose() *
                                                Vector::Ones(b.anchor.size()))));
    }
    const double res = kkt_residual_qp(blocks, p);
    EXPECT_GE(res, 0.5 * expect * delta);
    EXPECT_LE(res, 2.0 * expect * delta);
  }
}

TEST(KktResidual, ZeroSolutionGivesDataNorm) {
  std::mt19937_64 rng(10);
  const auto blocks = random_coupled_qp(rng);
  QpSolution zero;
  zero.lambda = Vector::Zero(blocks[0].anchor.size());
  Vector coupled = Vector::Zero(blocks[0].anchor.size());
  double expect = 0.0;
  for (const auto& b : blocks) {
    zero.mu.push_back(Vector::Zero(b.constraint_jacobian.rows()));
    zero.delta.push_back(Vector::Zero(b.hessian.rows()));
    expect = std::max({expect, inf_norm(b.gradient), inf_norm(b.constraint_offset)});
    coupled += b.anchor;
  }
  expect = std::max(expect, inf_norm(coupled));
  EXPECT_DOUBLE_EQ(kkt_residual_qp(blocks, zero), expect);
}

TEST(SolveCoupledQp, IndefiniteHessianNamesBlock) {
  auto blocks = scalar_case();
  blocks[1].hessian(0, 0) = -1.0;
  int b = -1;
  EXPECT_EQ(code_of([&] { solve_coupled_qp(blocks); }, &b),
            ErrorCode::kNotPositiveDefinite);
  EXPECT_EQ(b, 1);
}

TEST(SolveCoupledQp, RankDeficientConstraintsNameBlock) {
  std::mt19937_64 rng(11);
  RandomQpShape shape;
  shape.allow_empty_constraints = false;
  auto blocks = random_coupled_qp(rng, shape);
  auto& c = blocks[0].constraint_jacobian;
  c.conservativeResize(c.rows() + 1, Eigen::NoChange);
  c.row(c.rows() - 1) = c.row(0);
  blocks[0].constraint_offset.conservativeResize(c.rows());
  blocks[0].constraint_offset(c.rows() - 1) = 0.0;
  int b = -1;
  EXPECT_EQ(code_of([&] { solve_coupled_qp(blocks); }, &b),
            ErrorCode::kRankDeficientConstraints);
  EXPECT_EQ(b, 0);
}

TEST(SolveCoupledQp, SingularSchurIsReported) {
  // Coupling rows that never touch a variable.
  const std::vector<QpBlock> blocks = {
      block(mat(1, 1, {1}), vec({0}), mat(1, 1, {0}), vec({1})),
      block(mat(1, 1, {1}), vec({0}), mat(1, 1, {0}), vec({0}))};
  EXPECT_EQ(code_of([&] { solve_coupled_qp(blocks); }), ErrorCode::kSingularSchur);
  EXPECT_EQ(code_of([&] { dense_kkt_oracle(blocks); }), ErrorCode::kSingularKkt);
}

TEST(SolveCoupledQp, RejectsMismatchedShapes) {
  auto blocks = scalar_case();
  blocks[0].gradient = vec({0, 0});
  EXPECT_EQ(code_of([&] { solve_coupled_qp(blocks); }), ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace tsmhe
