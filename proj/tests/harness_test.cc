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

#include "tsmhe/harness.h"

#include <cmath>

#include <gtest/gtest.h>

#include "tsmhe/error.h"
#include "test_util.h"

namespace tsmhe {
namespace {

using testing::max_distance;

ScenarioConfig noise_free() {
  ScenarioConfig sc;
  sc.noise.sigma_r = 0.0;
  sc.noise.sigma_alpha = 0.0;
  return sc;
}

Trajectory truth_window(const Scenario& s, int l, int L) {
  return Trajectory(s.true_states.begin() + (l - L), s.true_states.begin() + l + 1);
}

TEST(GenerateScenario, NoiseFreeMeasurementsAreExact) {
  const Scenario s = generate_scenario(noise_free());
  const DiffDriveRobot robot;
  ASSERT_EQ(s.steps(), kDefaultSteps);
  ASSERT_EQ(s.true_states.size(), 61u);
  ASSERT_EQ(s.measurements.size(), 61u);
  EXPECT_EQ(s.true_states[0], testing::vec({0.1, 0.1, 0.0}));
  for (int n = 0; n <= 60; ++n) {
    EXPECT_EQ(s.measurements[n], robot.h(s.true_states[n]));
    if (n < 60) {
      EXPECT_EQ(s.controls[n], testing::vec({1.0, 0.4}));
      EXPECT_EQ(s.true_states[n + 1], robot.f(s.true_states[n], s.controls[n]));
    }
  }
}

TEST(GenerateScenario, DefaultArcStaysInUpperHalfPlane) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  for (const Vector& x : s.true_states) EXPECT_GT(x(1), 0.0);
}

TEST(GenerateScenario, SeedDeterminesNoise) {
  const Scenario a = generate_scenario(ScenarioConfig{}, 9);
  const Scenario b = generate_scenario(ScenarioConfig{}, 9);
  const Scenario c = generate_scenario(ScenarioConfig{}, 10);
  EXPECT_EQ(a.measurements, b.measurements);
  EXPECT_NE(a.measurements, c.measurements);
  EXPECT_EQ(a.true_states, c.true_states);
}

TEST(GenerateScenario, RangeNoiseHasConfiguredSpread) {
  ScenarioConfig sc;
  sc.steps = 10000;
  const Scenario s = generate_scenario(sc);
  const DiffDriveRobot robot;
  double sum = 0.0, sq = 0.0;
  const int n = static_cast<int>(s.measurements.size());
  for (int k = 0; k < n; ++k) {
    const double e = s.measurements[k](0) - robot.h(s.true_states[k])(0);
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.05, 0.05 * 0.05);
}

TEST(GenerateScenario, RejectsSingularAndShortRuns) {
  ScenarioConfig at_origin;
  at_origin.x0 = Vector::Zero(3);
  try {
    generate_scenario(at_origin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScenarioGeneration);
  }
  ScenarioConfig short_run;
  short_run.steps = 10;
  EXPECT_THROW(generate_scenario(short_run), Error);
  ScenarioConfig negative;
  negative.noise.sigma_r = -1.0;
  EXPECT_THROW(generate_scenario(negative), Error);
}

TEST(MeasurementCovariance, FallsBackForZeroSigma) {
  NoiseSpec n;
  n.sigma_r = 0.1;
  n.sigma_alpha = 0.0;
  const Matrix v = measurement_covariance(n);
  EXPECT_DOUBLE_EQ(v(0, 0), 0.01);
  EXPECT_DOUBLE_EQ(v(1, 1), NoiseSpec::kDefaultSigmaBearing * NoiseSpec::kDefaultSigmaBearing);
  EXPECT_EQ(v(0, 1), 0.0);
}

TEST(WindowInstance, DefaultStartUsesZeroHeading) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  const MheInstance inst = make_window_instance(s, 30, EstimatorConfig{});
  EXPECT_EQ(inst.window_start, 5);
  ASSERT_EQ(inst.initial_guess.size(), 26u);
  for (int k = 0; k <= 25; ++k) {
    EXPECT_EQ(inst.initial_guess[k].head(2), s.true_states[5 + k].head(2));
    EXPECT_EQ(inst.initial_guess[k](2), 0.0);
    EXPECT_EQ(inst.measurements[k], s.measurements[5 + k]);
  }
  EXPECT_EQ(inst.prior, inst.initial_guess[0]);
  EXPECT_THROW(make_window_instance(s, 24, EstimatorConfig{}), Error);
  EXPECT_THROW(make_window_instance(s, 61, EstimatorConfig{}), Error);
}

TEST(SolveWindow, CentralizedRecoversNoiseFreeTruth) {
  const Scenario s = generate_scenario(noise_free());
  EstimatorConfig cfg;
  cfg.solver = SolverConfig::defaults(Algorithm::kCentralized);
  WindowStart start;
  start.guess = truth_window(s, 25, 25);
  start.prior = s.true_states[0];
  const SolveResult res = solve_window(s, 25, cfg, start);
  EXPECT_EQ(res.status, SolveStatus::kConverged);
  EXPECT_LE(res.iterations, 2);
  EXPECT_LE(max_distance(res.trajectory, truth_window(s, 25, 25)), 1e-8);
}

TEST(SolveWindow, DistributedMatchesCentralized) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  EstimatorConfig central;
  central.solver = SolverConfig::defaults(Algorithm::kCentralized);
  EstimatorConfig dsqp;
  dsqp.solver = SolverConfig::defaults(Algorithm::kDistributedSqp);
  const SolveResult a = solve_window(s, 25, central);
  const SolveResult b = solve_window(s, 25, dsqp);
  ASSERT_EQ(a.status, SolveStatus::kConverged);
  ASSERT_EQ(b.status, SolveStatus::kConverged);
  EXPECT_LE(max_distance(a.trajectory, b.trajectory), 1e-6);
}

TEST(SolveWindow, WarmStartNeedsFewerIterations) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  for (Algorithm a : {Algorithm::kSensitivityAladin, Algorithm::kDistributedSqp,
                      Algorithm::kCentralized}) {
    EstimatorConfig cfg;
    cfg.solver = SolverConfig::defaults(a);
    cfg.solver.max_iter = 300;
    const SolveResult first = solve_window(s, 25, cfg);
    ASSERT_EQ(first.status, SolveStatus::kConverged);
    WindowStart warm;
    Trajectory shifted(first.trajectory.begin() + 1, first.trajectory.end());
    shifted.push_back(s.model()->f(first.trajectory.back(), s.controls[25]));
    warm.guess = shifted;
    warm.prior = first.trajectory[1];
    const SolveResult warm_run = solve_window(s, 26, cfg, warm);
    WindowStart cold;
    cold.prior = first.trajectory[1];
    const SolveResult cold_run = solve_window(s, 26, cfg, cold);
    ASSERT_EQ(warm_run.status, SolveStatus::kConverged) << algorithm_name(a);
    ASSERT_EQ(cold_run.status, SolveStatus::kConverged) << algorithm_name(a);
    EXPECT_LT(warm_run.iterations, cold_run.iterations) << algorithm_name(a);
  }
}

TEST(RecedingHorizon, NoiseFreeEstimatesMatchTruth) {
  ScenarioConfig sc = noise_free();
  sc.steps = 40;
  const Scenario s = generate_scenario(sc);
  const HorizonRun run = run_receding_horizon(s, EstimatorConfig{});
  ASSERT_EQ(run.estimates.size(), 16u);
  for (const auto& e : run.estimates) {
    EXPECT_EQ(e.status, SolveStatus::kConverged) << "l=" << e.window_end;
    EXPECT_LE(e.error, 1e-6) << "l=" << e.window_end;
    EXPECT_EQ(e.truth, s.true_states[e.window_end]);
  }
  EXPECT_TRUE(run.estimates.front().cold_restart);
  EXPECT_FALSE(run.estimates.back().cold_restart);
  EXPECT_LE(run.rmse(), 1e-6);
}

TEST(RecedingHorizon, BenchmarkAccuracyMatchesCentralized) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  EstimatorConfig central;
  central.solver = SolverConfig::defaults(Algorithm::kCentralized);
  const HorizonRun reference = run_receding_horizon(s, central);
  for (Algorithm a : {Algorithm::kSensitivityAladin, Algorithm::kDistributedSqp}) {
    EstimatorConfig cfg;
    cfg.solver = SolverConfig::defaults(a);
    // Distributed SQP contracts by roughly 0.6 per iteration at rho = 1e3 and
    // needs about 60 iterations per warm-started window.
    cfg.solver.max_iter = 150;
    const HorizonRun run = run_receding_horizon(s, cfg);
    ASSERT_EQ(run.estimates.size(), 36u);
    int converged = 0;
    for (const auto& e : run.estimates) converged += e.status == SolveStatus::kConverged;
    EXPECT_EQ(converged, 36) << algorithm_name(a);
    EXPECT_LE(run.rmse() / reference.rmse(), 1.01) << algorithm_name(a);
    for (std::size_t k = 0; k < run.estimates.size(); ++k) {
      EXPECT_LE(testing::inf_norm(Vector(run.estimates[k].estimate -
                                         reference.estimates[k].estimate)),
                1e-6);
    }
  }
  for (const auto& e : reference.estimates) EXPECT_EQ(e.status, SolveStatus::kConverged);
  // The default estimator converges in every window within the default limit.
  const HorizonRun fallback = run_receding_horizon(s, EstimatorConfig{});
  for (const auto& e : fallback.estimates) {
    EXPECT_EQ(e.status, SolveStatus::kConverged) << "l=" << e.window_end;
    EXPECT_FALSE(e.cold_restart && e.window_end > 25);
  }
  // The estimator actually filters: well below the raw range noise.
  EXPECT_LT(reference.rmse(), 0.05);
}

TEST(RecedingHorizon, FailedWindowRestartsCold) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  EstimatorConfig cfg;
  cfg.horizon = 5;
  cfg.num_windows = 2;
  cfg.solver = SolverConfig::defaults(Algorithm::kDistributedSqp);
  cfg.solver.max_iter = 1;
  const HorizonRun run = run_receding_horizon(s, cfg);
  ASSERT_EQ(run.estimates.size(), 56u);
  for (const auto& e : run.estimates) EXPECT_EQ(e.status, SolveStatus::kMaxIter);
  EXPECT_FALSE(run.estimates[1].cold_restart);
}

TEST(Sweep, RowsAgreeAcrossWindowCounts) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  EstimatorConfig cfg;
  cfg.solver = SolverConfig::defaults(Algorithm::kDistributedSqp);
  const std::vector<int> ns = {3, 4, 5, 6};
  const auto rows = sweep_subwindows(s, 25, ns, cfg, 50);
  ASSERT_EQ(rows.size(), ns.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].num_windows, ns[k]);
    EXPECT_NE(rows[k].status, SolveStatus::kError) << rows[k].message;
    EXPECT_LE(rows[k].final_error, 1e-8) << "N=" << ns[k];
    EXPECT_GE(rows[k].total_ms, 0.0);
    EXPECT_GE(rows[k].mean_local_ms, 0.0);
    EXPECT_GE(rows[k].mean_qp_ms, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_LE(max_distance(rows[k].trajectory, rows[j].trajectory), 1e-6);
    }
  }
}

TEST(Sweep, InvalidCountBecomesErrorRow) {
  const Scenario s = generate_scenario(ScenarioConfig{});
  const auto rows = sweep_subwindows(s, 25, {4, 26}, EstimatorConfig{}, 5);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NE(rows[0].status, SolveStatus::kError);
  EXPECT_EQ(rows[1].status, SolveStatus::kError);
  EXPECT_FALSE(rows[1].message.empty());
}

}  // namespace
}  // namespace tsmhe
