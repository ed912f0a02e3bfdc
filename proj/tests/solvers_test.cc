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

#include "tsmhe/solvers.h"

#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "tsmhe/harness.h"
#include "test_util.h"

namespace tsmhe {
namespace {

using testing::inf_norm;
using testing::max_distance;

constexpr Algorithm kAll[] = {Algorithm::kGaussNewtonAladin,
                              Algorithm::kSensitivityAladin,
                              Algorithm::kDistributedSqp, Algorithm::kCentralized};
constexpr Algorithm kDistributed[] = {Algorithm::kGaussNewtonAladin,
                                      Algorithm::kSensitivityAladin,
                                      Algorithm::kDistributedSqp};

bool same_records(const std::vector<ConvergenceRecord>& a,
                  const std::vector<ConvergenceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::memcmp(&a[k], &b[k], sizeof(ConvergenceRecord)) != 0) return false;
  }
  return true;
}

TEST(TerminationCheck, Examples) {
  SolverConfig cfg;
  cfg.tol = 1e-8;
  ConvergenceRecord rec;
  EXPECT_EQ(termination_check(rec, cfg), Termination::kConverged);
  rec.coupling_inf = 1e-3;
  EXPECT_EQ(termination_check(rec, cfg), Termination::kContinue);
  rec.coupling_inf = rec.primal_step_inf = rec.dynamics_inf = rec.stationarity_inf = 1e-8;
  EXPECT_EQ(termination_check(rec, cfg), Termination::kConverged);
  rec.stationarity_inf = std::nextafter(1e-8, 1.0);
  EXPECT_EQ(termination_check(rec, cfg), Termination::kContinue);
  // The reference distance and the objective do not take part.
  ConvergenceRecord other;
  other.distance_to_reference = 1.0;
  other.objective = 1e6;
  EXPECT_EQ(termination_check(other, cfg), Termination::kConverged);
}

TEST(SolverConfig, DefaultsAndNames) {
  EXPECT_EQ(SolverConfig::defaults(Algorithm::kGaussNewtonAladin).rho, 25.0);
  EXPECT_EQ(SolverConfig::defaults(Algorithm::kSensitivityAladin).rho, 1e3);
  EXPECT_EQ(SolverConfig::defaults(Algorithm::kDistributedSqp).rho, 1e3);
  for (Algorithm a : kAll) {
    const SolverConfig cfg = SolverConfig::defaults(a);
    EXPECT_EQ(cfg.algorithm, a);
    EXPECT_EQ(cfg.tol, 1e-8);
    EXPECT_EQ(cfg.max_iter, 50);
    EXPECT_EQ(parse_algorithm(algorithm_name(a)), a);
    EXPECT_NO_THROW(cfg.validate());
  }
  EXPECT_FALSE(parse_algorithm("admm"));
  EXPECT_EQ(parse_hessian_mode("exact"), HessianMode::kExactLagrangian);
  EXPECT_EQ(parse_hessian_mode("gauss-newton"), HessianMode::kGaussNewton);
  EXPECT_FALSE(parse_hessian_mode("bfgs"));
  SolverConfig bad;
  bad.rho = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = SolverConfig{};
  bad.tol = -1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Solve, RejectsMismatchedAlgorithm) {
  const MheInstance inst = testing::benchmark_instance();
  const Partition p = build_partition(25, 4, 3);
  EXPECT_THROW(run_distributed_sqp(inst, p, SolverConfig::defaults(Algorithm::kCentralized)),
               Error);
}

class LinearGaussian : public ::testing::TestWithParam<Algorithm> {};

TEST_P(LinearGaussian, MatchesDenseLeastSquares) {
  const testing::LinearCase lc = testing::make_linear_case(12, 31);
  const Trajectory oracle = testing::dense_least_squares(lc);
  for (int n : {2, 3, 4}) {
    SolverConfig cfg = SolverConfig::defaults(GetParam());
    cfg.tol = 1e-10;
    cfg.max_iter = 400;
    cfg.record_timing = false;
    const SolveResult res = solve(lc.instance, build_partition(12, n, 3), cfg);
    EXPECT_EQ(res.status, SolveStatus::kConverged) << res.message;
    EXPECT_LE(max_distance(res.trajectory, oracle), 1e-9) << "N=" << n;
  }
}

INSTANTIATE_TEST_SUITE_P(AllSolvers, LinearGaussian, ::testing::ValuesIn(kAll),
                         [](const auto& info) {
                           std::string name = algorithm_name(info.param);
                           for (char& c : name) {
                             if (c == '-') c = '_';
                           }
                           return name;
                         });

TEST(SensitivityAladin, PredictorIsExactOnLinearGaussian) {
  const testing::LinearCase lc = testing::make_linear_case(12, 32);
  SolverConfig cfg = SolverConfig::defaults(Algorithm::kSensitivityAladin);
  cfg.tol = 1e-10;
  cfg.max_iter = 400;
  cfg.switch_tol = std::numeric_limits<double>::infinity();
  const SolveResult res = run_sensitivity_aladin(lc.instance, build_partition(12, 3, 3), cfg);
  ASSERT_EQ(res.status, SolveStatus::kConverged);
  // Only the first-iteration solves are exact; every later update is a
  // predictor step and still lands on the oracle.
  EXPECT_EQ(res.exact_local_solves, 3);
  EXPECT_EQ(res.predictor_steps, 3 * res.iterations);
  EXPECT_EQ(res.predictor_fallbacks, 0);
  EXPECT_LE(max_distance(res.trajectory, testing::dense_least_squares(lc)), 1e-9);
}

TEST(DistributedSqp, FirstIterationIsFullSpaceStep) {
  ScenarioConfig sc;
  sc.steps = 6;
  sc.horizon = 6;
  const Scenario s = generate_scenario(sc);
  EstimatorConfig ec;
  ec.horizon = 6;
  const MheInstance robot = make_window_instance(s, 6, ec);
  const testing::LinearCase lc = testing::make_linear_case(6, 33);
  const Partition p = build_partition(6, 2, 3);
  for (const MheInstance* inst : {&robot, &lc.instance}) {
    SolverConfig cfg = SolverConfig::defaults(Algorithm::kDistributedSqp);
    cfg.max_iter = 1;
    const SolveResult res = run_distributed_sqp(*inst, p, cfg);
    ASSERT_EQ(res.iterations, 1);
    const testing::DenseStep step = testing::dense_sqp_step(*inst, p, cfg.rho);
    for (int i = 0; i < 2; ++i) {
      EXPECT_LE(inf_norm(Vector(res.state.y[i] - step.y[i])), 1e-10);
    }
    EXPECT_LE(inf_norm(Vector(res.state.lambda - step.lambda)),
              1e-10 * std::max(1.0, inf_norm(step.lambda)));
  }
}

class RobotBenchmark : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    inst_ = new MheInstance(testing::benchmark_instance());
    reference_ = new SolveResult(solve_reference(*inst_));
  }
  static void TearDownTestSuite() {
    delete inst_;
    delete reference_;
  }
  static MheInstance* inst_;
  static SolveResult* reference_;
};

MheInstance* RobotBenchmark::inst_ = nullptr;
SolveResult* RobotBenchmark::reference_ = nullptr;

TEST_F(RobotBenchmark, ReferenceIsCertified) {
  ASSERT_EQ(reference_->status, SolveStatus::kConverged);
  EXPECT_LE(centralized_kkt_residual(*inst_, reference_->trajectory).max(), 1e-10);
}

TEST_F(RobotBenchmark, AlgorithmsAgreeWithCentralized) {
  const Partition p = build_partition(25, 4, 3);
  for (Algorithm a : kDistributed) {
    SolverConfig cfg = SolverConfig::defaults(a);
    cfg.record_timing = false;
    RunOptions opts;
    opts.reference = &reference_->trajectory;
    const SolveResult res = solve(*inst_, p, cfg, opts);
    ASSERT_EQ(res.status, SolveStatus::kConverged) << algorithm_name(a) << res.message;
    EXPECT_LE(max_distance(res.trajectory, reference_->trajectory), 1e-6) << algorithm_name(a);
    EXPECT_LE(centralized_kkt_residual(*inst_, res.trajectory).max(), 10 * cfg.tol)
        << algorithm_name(a);
    const ConvergenceRecord& last = res.records.back();
    EXPECT_EQ(last.iter, res.iterations);
    EXPECT_LE(std::max({last.primal_step_inf, last.coupling_inf, last.dynamics_inf,
                        last.stationarity_inf}),
              cfg.tol);
    EXPECT_NEAR(res.objective, reference_->objective, 1e-8 * reference_->objective);
    for (const auto& rec : res.records) EXPECT_GE(rec.distance_to_reference, 0.0);
  }
}

TEST_F(RobotBenchmark, CentralizedMatchesReference) {
  SolverConfig cfg = SolverConfig::defaults(Algorithm::kCentralized);
  const SolveResult res = run_centralized(*inst_, cfg);
  ASSERT_EQ(res.status, SolveStatus::kConverged);
  EXPECT_LE(max_distance(res.trajectory, reference_->trajectory), 1e-8);
  EXPECT_LE(centralized_kkt_residual(*inst_, res.trajectory).max(), 10 * cfg.tol);
}

TEST_F(RobotBenchmark, FixedPointStartStopsAtFirstIteration) {
  const Partition p = build_partition(25, 4, 3);
  const IterateState start =
      lift_solution(reference_->trajectory, reference_->state.mu[0], p);
  for (Algorithm a : kDistributed) {
    RunOptions opts;
    opts.warm_start = &start;
    const SolveResult res = solve(*inst_, p, SolverConfig::defaults(a), opts);
    EXPECT_EQ(res.status, SolveStatus::kConverged) << algorithm_name(a);
    EXPECT_EQ(res.iterations, 1) << algorithm_name(a);
    EXPECT_LE(max_distance(res.trajectory, reference_->trajectory), 1e-8);
  }
  IterateState central;
  central.y = {[&] {
    Vector v(78);
    for (int k = 0; k <= 25; ++k) v.segment(3 * k, 3) = reference_->trajectory[k];
    return v;
  }()};
  central.mu = reference_->state.mu;
  central.lambda = Vector::Zero(0);
  RunOptions opts;
  opts.warm_start = &central;
  const SolveResult res =
      run_centralized(*inst_, SolverConfig::defaults(Algorithm::kCentralized), opts);
  EXPECT_EQ(res.iterations, 1);
  EXPECT_EQ(res.status, SolveStatus::kConverged);
}

TEST_F(RobotBenchmark, WarmStartShapeIsChecked) {
  const Partition p = build_partition(25, 4, 3);
  IterateState bad = lift_solution(reference_->trajectory, reference_->state.mu[0], p);
  bad.lambda = Vector::Zero(3);
  RunOptions opts;
  opts.warm_start = &bad;
  EXPECT_THROW(solve(*inst_, p, SolverConfig::defaults(Algorithm::kDistributedSqp), opts),
               Error);
}

TEST_F(RobotBenchmark, FixedIterationModeRunsToLimit) {
  const Partition p = build_partition(25, 4, 3);
  SolverConfig cfg = SolverConfig::defaults(Algorithm::kSensitivityAladin);
  cfg.stop_at_tol = false;
  cfg.max_iter = 20;
  const SolveResult res = solve(*inst_, p, cfg);
  EXPECT_EQ(res.iterations, 20);
  EXPECT_EQ(res.records.size(), 20u);
  EXPECT_EQ(res.status, SolveStatus::kConverged);
}

TEST_F(RobotBenchmark, IterationLimitIsFlagged) {
  const Partition p = build_partition(25, 4, 3);
  SolverConfig cfg = SolverConfig::defaults(Algorithm::kDistributedSqp);
  cfg.max_iter = 3;
  const SolveResult res = solve(*inst_, p, cfg);
  EXPECT_EQ(res.status, SolveStatus::kMaxIter);
  EXPECT_EQ(res.iterations, 3);
  EXPECT_EQ(res.trajectory.size(), 26u);
}

TEST_F(RobotBenchmark, RunsAreDeterministic) {
  const Partition p = build_partition(25, 4, 3);
  for (Algorithm a : kAll) {
    SolverConfig cfg = SolverConfig::defaults(a);
    cfg.record_timing = false;
    const SolveResult first = solve(*inst_, p, cfg);
    const SolveResult second = solve(*inst_, p, cfg);
    EXPECT_TRUE(same_records(first.records, second.records)) << algorithm_name(a);
    cfg.workers = 3;
    const SolveResult threaded = solve(*inst_, p, cfg);
    EXPECT_TRUE(same_records(first.records, threaded.records)) << algorithm_name(a);
    EXPECT_EQ(first.trajectory, threaded.trajectory);
  }
}

TEST_F(RobotBenchmark, SensitivityAladinCounters) {
  const Partition p = build_partition(25, 4, 3);
  const SolveResult res = solve(*inst_, p, SolverConfig::defaults(Algorithm::kSensitivityAladin));
  ASSERT_EQ(res.status, SolveStatus::kConverged);
  EXPECT_GE(res.exact_local_solves, 4);
  EXPECT_EQ(res.exact_local_solves + res.predictor_steps, 4 + 4 * res.iterations);
  EXPECT_GT(res.predictor_steps, 0);
  EXPECT_LE(res.inner_failures, res.exact_local_solves);
}

TEST_F(RobotBenchmark, GaussNewtonAladinCounters) {
  const Partition p = build_partition(25, 4, 3);
  const SolveResult res = solve(*inst_, p, SolverConfig::defaults(Algorithm::kGaussNewtonAladin));
  ASSERT_EQ(res.status, SolveStatus::kConverged);
  EXPECT_EQ(res.exact_local_solves, 4 * res.iterations);
  EXPECT_EQ(res.predictor_steps, 0);
}

}  // namespace
}  // namespace tsmhe
