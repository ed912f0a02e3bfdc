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
#include <string>

#include "tsmhe/error.h"

namespace tsmhe {

std::shared_ptr<const SystemModel> Scenario::model() const {
  return std::make_shared<DiffDriveRobot>(sample_time);
}

Vector default_initial_state() {
  Vector x0(3);
  x0 << 0.1, 0.1, 0.0;
  return x0;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  if (cfg.steps < cfg.horizon || cfg.horizon < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need steps >= horizon >= 1 (K=" + std::to_string(cfg.steps) +
                    ", L=" + std::to_string(cfg.horizon) + ")");
  }
  if (!(cfg.noise.sigma_r >= 0.0) || !(cfg.noise.sigma_alpha >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise sigmas must be >= 0");
  }
  const DiffDriveRobot robot(cfg.sample_time);
  Scenario s;
  s.sample_time = cfg.sample_time;
  s.noise = cfg.noise;
  Vector u(2);
  u << cfg.v, cfg.omega;
  Vector x = cfg.x0.size() == 0 ? default_initial_state() : cfg.x0;
  if (x.size() != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "initial state needs 3 entries");
  }
  s.true_states.push_back(x);
  for (int n = 0; n < cfg.steps; ++n) {
    s.controls.push_back(u);
    x = robot.f(x, u);
    s.true_states.push_back(x);
  }

  GaussianSource gauss(cfg.noise.seed);
  for (int n = 0; n <= cfg.steps; ++n) {
    Vector y;
    try {
      y = robot.h(s.true_states[n]);
    } catch (const Error&) {
      throw Error(ErrorCode::kScenarioGeneration,
                  "trajectory reaches the observation singularity at step " +
                      std::to_string(n) + "; choose a different control schedule");
    }
    y(0) += cfg.noise.sigma_r * gauss.next();
    y(1) += cfg.noise.sigma_alpha * gauss.next();
    s.measurements.push_back(y);
  }
  return s;
}

Scenario generate_scenario(ScenarioConfig cfg, std::uint64_t seed) {
  cfg.noise.seed = seed;
  return generate_scenario(cfg);
}

Matrix measurement_covariance(const NoiseSpec& noise) {
  const double sr =
      noise.sigma_r > 0.0 ? noise.sigma_r : NoiseSpec::kDefaultSigmaRange;
  const double sa = noise.sigma_alpha > 0.0 ? noise.sigma_alpha
                                            : NoiseSpec::kDefaultSigmaBearing;
  Matrix v = Matrix::Zero(2, 2);
  v(0, 0) = sr * sr;
  v(1, 1) = sa * sa;
  return v;
}

Trajectory position_guess(const Scenario& scenario, int window_end,
                          int horizon) {
  Trajectory guess;
  for (int n = window_end - horizon; n <= window_end; ++n) {
    Vector x = scenario.true_states[n];
    x(2) = 0.0;
    guess.push_back(x);
  }
  return guess;
}

MheInstance make_window_instance(const Scenario& scenario, int window_end,
                                 const EstimatorConfig& cfg,
                                 const WindowStart& start) {
  const int L = cfg.horizon;
  if (L < 1 || window_end < L || window_end > scenario.steps()) {
    throw Error(ErrorCode::kInvalidArgument,
                "window end " + std::to_string(window_end) +
                    " outside [L, K] for L=" + std::to_string(L) +
                    ", K=" + std::to_string(scenario.steps()));
  }
  MheInstance inst;
  inst.model = scenario.model();
  inst.horizon = L;
  inst.window_start = window_end - L;
  for (int n = window_end - L; n <= window_end; ++n) {
    inst.measurements.push_back(scenario.measurements[n]);
    if (n < window_end) inst.controls.push_back(scenario.controls[n]);
  }
  inst.initial_guess =
      start.guess ? *start.guess : position_guess(scenario, window_end, L);
  inst.prior = start.prior ? *start.prior
                           : position_guess(scenario, window_end, L).front();
  inst.prior_cov = cfg.prior_cov;
  inst.meas_cov = measurement_covariance(scenario.noise);
  inst.validate();
  return inst;
}

SolveResult solve_window(const Scenario& scenario, int window_end,
                         const EstimatorConfig& cfg, const WindowStart& start,
                         const RunOptions& options) {
  const MheInstance inst = make_window_instance(scenario, window_end, cfg, start);
  const int n = cfg.solver.algorithm == Algorithm::kCentralized ? 1
                                                                 : cfg.num_windows;
  const Partition partition = build_partition(inst.horizon, n, inst.model->nx());
  SolveResult result = solve(inst, partition, cfg.solver, options);
  if (result.status == SolveStatus::kError) {
    result.message = "window ending at " + std::to_string(window_end) + ": " +
                     result.message;
  }
  return result;
}

SolverConfig reference_config() {
  SolverConfig cfg = SolverConfig::defaults(Algorithm::kCentralized);
  cfg.tol = 1e-11;
  cfg.max_iter = 500;
  cfg.record_timing = false;
  return cfg;
}

SolveResult solve_reference(const MheInstance& instance) {
  return run_centralized(instance, reference_config());
}

double HorizonRun::rmse() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : estimates) {
    sum += (e.estimate - e.truth).squaredNorm();
    count += static_cast<std::size_t>(e.estimate.size());
  }
  return count > 0 ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
}

HorizonRun run_receding_horizon(const Scenario& scenario,
                                const EstimatorConfig& cfg) {
  if (scenario.steps() < cfg.horizon) {
    throw Error(ErrorCode::kInvalidArgument, "scenario shorter than horizon");
  }
  const auto model = scenario.model();
  HorizonRun run;
  WindowStart start;
  bool cold = true;
  for (int l = cfg.horizon; l <= scenario.steps(); ++l) {
    SolveResult result = solve_window(scenario, l, cfg, start);
    WindowEstimate est;
    est.window_end = l;
    est.status = result.status;
    est.iterations = result.iterations;
    est.cold_restart = cold;
    est.truth = scenario.true_states[l];
    if (result.status == SolveStatus::kError) {
      est.estimate = position_guess(scenario, l, cfg.horizon).back();
      start = {};
      cold = true;
    } else {
      const Trajectory& traj = result.trajectory;
      est.estimate = traj.back();
      Trajectory shifted(traj.begin() + 1, traj.end());
      shifted.push_back(model->f(traj.back(), scenario.controls[std::min(
                                                   l, scenario.steps() - 1)]));
      start.guess = std::move(shifted);
      start.prior = traj[1];
      cold = false;
    }
    est.error = (est.estimate - est.truth).lpNorm<Eigen::Infinity>();
    run.estimates.push_back(std::move(est));
    run.results.push_back(std::move(result));
  }
  return run;
}

std::vector<SweepRow> sweep_subwindows(const Scenario& scenario,
                                       int window_end,
                                       const std::vector<int>& num_windows,
                                       const EstimatorConfig& cfg,
                                       int iterations) {
  const MheInstance inst = make_window_instance(scenario, window_end, cfg);
  const SolveResult reference = solve_reference(inst);
  std::vector<SweepRow> rows;
  for (int n : num_windows) {
    SweepRow row;
    row.num_windows = n;
    try {
      SolverConfig scfg = cfg.solver;
      scfg.max_iter = iterations;
      scfg.stop_at_tol = false;
      const Partition partition =
          build_partition(inst.horizon, n, inst.model->nx());
      RunOptions opts;
      opts.reference = &reference.trajectory;
      const SolveResult res = solve(inst, partition, scfg, opts);
      row.status = res.status;
      row.message = res.message;
      row.trajectory = res.trajectory;
      for (const auto& rec : res.records) {
        if (row.iterations_to_tol < 0 &&
            termination_check(rec, scfg) == Termination::kConverged) {
          row.iterations_to_tol = rec.iter;
        }
        row.mean_local_ms += rec.local_ms;
        row.mean_qp_ms += rec.qp_ms;
      }
      if (!res.records.empty()) {
        const double count = static_cast<double>(res.records.size());
        row.total_ms = res.records.back().wall_ms;
        row.mean_local_ms /= count;
        row.mean_qp_ms /= count;
        row.final_error = res.records.back().distance_to_reference;
      }
    } catch (const Error& e) {
      row.status = SolveStatus::kError;
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tsmhe
