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

// File formats. JSON numbers are written in shortest round-trip form, CSV
// numbers with 17 significant digits; both parse back to the same doubles.
// All writers overwrite their target. Failures throw ErrorCode::kIo naming
// the path.
//
// scenario.json
//   {"model": {"T", "sigma_r", "sigma_alpha", "seed"},
//    "weights": {"P", "V"},
//    "controls": [[v, omega], ...],
//    "true_states": [[phi, psi, theta], ...],
//    "measurements": [[r, alpha], ...]}
//
// result.json
//   {"config": {...}, "status", "trajectory", "objective", "iterations",
//    "final_metrics": {...}, "counters": {...}, "message"}
//
// iters.csv     iter,primal_step_inf,coupling_inf,dynamics_inf,
//               stationarity_inf,dist_to_ref,objective,wall_ms
// estimates.csv l,phi,psi,theta,true_phi,true_psi,true_theta,error,status,
//               iterations
// sweep.csv     N,iterations_to_tol,total_ms,mean_local_ms,mean_qp_ms,
//               final_error,status

#ifndef TSMHE_IO_H_
#define TSMHE_IO_H_

#include <optional>
#include <string>
#include <vector>

#include "tsmhe/harness.h"

namespace tsmhe {

void write_scenario_json(const std::string& path, const Scenario& scenario);
Scenario read_scenario_json(const std::string& path);

struct ResultDocument {
  SolverConfig solver;
  int num_windows = 1;
  int window_end = 0;
  int horizon = 0;
  Matrix prior_cov;
  Matrix meas_cov;
  SolveStatus status = SolveStatus::kMaxIter;
  Trajectory trajectory;
  double objective = 0.0;
  int iterations = 0;
  std::optional<ConvergenceRecord> final_metrics;  // timing fields omitted
  int exact_local_solves = 0;
  int predictor_steps = 0;
  int predictor_fallbacks = 0;
  int inner_failures = 0;
  std::string message;
};

ResultDocument make_result_document(const SolveResult& result,
                                    const EstimatorConfig& cfg,
                                    const MheInstance& instance,
                                    int window_end);
void write_result_json(const std::string& path, const ResultDocument& doc);
ResultDocument read_result_json(const std::string& path);

void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRecord>& records);
void write_estimates_csv(const std::string& path, const HorizonRun& run);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

inline constexpr const char* kConvergenceHeader =
    "iter,primal_step_inf,coupling_inf,dynamics_inf,stationarity_inf,"
    "dist_to_ref,objective,wall_ms";
inline constexpr const char* kEstimatesHeader =
    "l,phi,psi,theta,true_phi,true_psi,true_theta,error,status,iterations";
inline constexpr const char* kSweepHeader =
    "N,iterations_to_tol,total_ms,mean_local_ms,mean_qp_ms,final_error,status";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::string& path);

std::vector<ConvergenceRecord> read_convergence_csv(const std::string& path);

}  // namespace tsmhe

#endif  // TSMHE_IO_H_
