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

// Robot benchmark: scenario simulation, single-window solves, the receding
// horizon loop and the sub-window sweep.

#ifndef TSMHE_HARNESS_H_
#define TSMHE_HARNESS_H_

#include <memory>
#include <optional>
#include <vector>

#include "tsmhe/model.h"
#include "tsmhe/problem.h"
#include "tsmhe/solvers.h"

namespace tsmhe {

inline constexpr int kDefaultHorizon = 25;
inline constexpr int kDefaultSteps = 60;

struct ScenarioConfig {
  int steps = kDefaultSteps;  // K
  int horizon = kDefaultHorizon;
  double sample_time = DiffDriveRobot::kDefaultSampleTime;
  // Open-loop schedule: constant (v, omega). The default arc stays in the
  // upper half-plane, clear of the observation singularity at the origin.
  double v = 1.0;
  double omega = 0.4;
  Vector x0 = Vector::Zero(0);  // empty means (0.1, 0.1, 0.0)
  NoiseSpec noise;
};

struct Scenario {
  double sample_time = DiffDriveRobot::kDefaultSampleTime;
  NoiseSpec noise;
  Trajectory true_states;   // K + 1
  Trajectory controls;      // K
  Trajectory measurements;  // K + 1

  int steps() const { return static_cast<int>(controls.size()); }
  std::shared_ptr<const SystemModel> model() const;
};

Vector default_initial_state();

// Deterministic in cfg.noise.seed. Throws kScenarioGeneration if the
// trajectory comes within the model's origin tolerance.
Scenario generate_scenario(const ScenarioConfig& cfg);
Scenario generate_scenario(ScenarioConfig cfg, std::uint64_t seed);

// V = diag(sigma_r^2, sigma_alpha^2); a zero sigma falls back to its
// default so the weight stays positive definite.
Matrix measurement_covariance(const NoiseSpec& noise);

struct EstimatorConfig {
  int horizon = kDefaultHorizon;
  int num_windows = 4;
  SolverConfig solver = SolverConfig::defaults(Algorithm::kSensitivityAladin);
  Matrix prior_cov = Matrix::Identity(3, 3);
};

// Start data for a window. Missing entries use the defaults: prior and
// guess from the true positions with zero heading, zero duals.
struct WindowStart {
  std::optional<Vector> prior;
  std::optional<Trajectory> guess;
};

// Window [l - L, l] of the scenario.
MheInstance make_window_instance(const Scenario& scenario, int window_end,
                                 const EstimatorConfig& cfg,
                                 const WindowStart& start = {});

// Lifted (phi*, psi*, 0) guess of the true trajectory over the window.
Trajectory position_guess(const Scenario& scenario, int window_end,
                          int horizon);

SolveResult solve_window(const Scenario& scenario, int window_end,
                         const EstimatorConfig& cfg,
                         const WindowStart& start = {},
                         const RunOptions& options = {});

// Tight centralized solve used as the distance reference.
SolverConfig reference_config();
SolveResult solve_reference(const MheInstance& instance);

struct WindowEstimate {
  int window_end = 0;
  Vector estimate;  // x_l
  Vector truth;
  double error = 0.0;  // ||estimate - truth||_inf
  SolveStatus status = SolveStatus::kMaxIter;
  int iterations = 0;
  bool cold_restart = false;
};

struct HorizonRun {
  std::vector<WindowEstimate> estimates;
  std::vector<SolveResult> results;
  double rmse() const;  // over all components of x_l - x*_l
};

// For l = L .. K. The next window's prior is the previous window's estimate
// of its oldest state (P fixed); the primal guess is the previous solution
// shifted by one step and extended by the dynamics. A failed window is
// recorded and the next one restarts cold.
HorizonRun run_receding_horizon(const Scenario& scenario,
                                const EstimatorConfig& cfg);

struct SweepRow {
  int num_windows = 0;
  int iterations_to_tol = -1;  // first iteration meeting tol, -1 if none
  double total_ms = 0.0;
  double mean_local_ms = 0.0;
  double mean_qp_ms = 0.0;
  double final_error = 0.0;  // distance to the centralized reference
  SolveStatus status = SolveStatus::kMaxIter;
  std::string message;
  Trajectory trajectory;
};

// Runs exactly `iterations` outer iterations per N.
std::vector<SweepRow> sweep_subwindows(const Scenario& scenario,
                                       int window_end,
                                       const std::vector<int>& num_windows,
                                       const EstimatorConfig& cfg,
                                       int iterations = 50);

}  // namespace tsmhe

#endif  // TSMHE_HARNESS_H_
