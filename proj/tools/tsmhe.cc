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

// tsmhe: command-line front end.
//
// Exit codes: 0 success, 2 iteration limit reached, 3 input error,
// 4 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsmhe/checks.h"
#include "tsmhe/error.h"
#include "tsmhe/harness.h"
#include "tsmhe/io.h"

namespace {

using namespace tsmhe;

constexpr int kExitOk = 0;
constexpr int kExitMaxIter = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

int exit_code(SolveStatus status, std::optional<ErrorCode> error) {
  switch (status) {
    case SolveStatus::kConverged:
      return kExitOk;
    case SolveStatus::kMaxIter:
      return kExitMaxIter;
    case SolveStatus::kError:
      return error && !is_numerical(*error) ? kExitInput : kExitNumerical;
  }
  return kExitNumerical;
}

// Options shared by the solver subcommands.
struct SolverFlags {
  std::string scenario;
  std::string algorithm = "dsqp";
  int sub_windows = 4;
  int horizon = kDefaultHorizon;
  std::optional<double> rho;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> hessian;
  int workers = 1;
  bool no_timing = false;

  void add_to(CLI::App* app, bool with_limits) {
    app->add_option("--scenario", scenario, "Scenario JSON")->required();
    app->add_option("--algorithm", algorithm,
                    "gn-aladin | sa-aladin | dsqp | centralized")
        ->capture_default_str();
    app->add_option("--horizon", horizon, "Window length L")
        ->capture_default_str();
    app->add_option("--rho", rho, "Penalty parameter");
    app->add_option("--tol", tol, "Outer tolerance");
    if (with_limits) app->add_option("--max-iter", max_iter, "Outer iteration limit");
    app->add_option("--hessian", hessian, "gauss-newton | exact");
    app->add_option("--workers", workers, "Threads for the per-window work")
        ->capture_default_str();
    app->add_flag("--no-timing", no_timing,
                  "Write zero timings so output files are reproducible");
  }

  EstimatorConfig config() const {
    const auto a = parse_algorithm(algorithm);
    if (!a) throw Error(ErrorCode::kInvalidArgument, "unknown algorithm '" + algorithm + "'");
    EstimatorConfig cfg;
    cfg.horizon = horizon;
    cfg.num_windows = sub_windows;
    cfg.solver = SolverConfig::defaults(*a);
    if (rho) cfg.solver.rho = *rho;
    if (tol) cfg.solver.tol = *tol;
    if (max_iter) cfg.solver.max_iter = *max_iter;
    if (hessian) {
      const auto mode = parse_hessian_mode(*hessian);
      if (!mode) throw Error(ErrorCode::kInvalidArgument, "unknown Hessian mode '" + *hessian + "'");
      cfg.solver.hessian_mode = *mode;
    }
    cfg.solver.workers = workers;
    cfg.solver.record_timing = !no_timing;
    cfg.solver.validate();
    return cfg;
  }
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("bad number in ") + what + ": '" + item + "'");
    }
  }
  return out;
}

int run_simulate(const ScenarioConfig& base, const std::string& control,
                 const std::string& x0, const std::string& out) {
  ScenarioConfig cfg = base;
  const auto u = parse_list(control, "--control");
  if (u.size() != 2) throw Error(ErrorCode::kInvalidArgument, "--control takes v,omega");
  cfg.v = u[0];
  cfg.omega = u[1];
  if (!x0.empty()) {
    const auto x = parse_list(x0, "--x0");
    if (x.size() != 3) throw Error(ErrorCode::kInvalidArgument, "--x0 takes phi,psi,theta");
    cfg.x0 = Eigen::Map<const Vector>(x.data(), 3);
  }
  write_scenario_json(out, generate_scenario(cfg));
  std::printf("wrote %s (%d steps)\n", out.c_str(), cfg.steps);
  return kExitOk;
}

int run_solve(const SolverFlags& flags, std::optional<int> window_end,
              const std::string& log, const std::string& out) {
  const Scenario scenario = read_scenario_json(flags.scenario);
  const EstimatorConfig cfg = flags.config();
  const int l = window_end.value_or(cfg.horizon);
  const MheInstance inst = make_window_instance(scenario, l, cfg);
  const SolveResult result = solve_window(scenario, l, cfg);
  if (!log.empty()) write_convergence_csv(log, result.records);
  if (!out.empty()) {
    write_result_json(out, make_result_document(result, cfg, inst, l));
  }
  std::printf("%s: %s after %d iterations, objective %.10g\n",
              algorithm_name(cfg.solver.algorithm), status_name(result.status),
              result.iterations, result.objective);
  if (!result.message.empty()) std::fprintf(stderr, "%s\n", result.message.c_str());
  return exit_code(result.status, result.error);
}

int run_estimate(const SolverFlags& flags, const std::string& out) {
  const Scenario scenario = read_scenario_json(flags.scenario);
  const EstimatorConfig cfg = flags.config();
  const HorizonRun run = run_receding_horizon(scenario, cfg);
  write_estimates_csv(out, run);
  int code = kExitOk;
  int converged = 0;
  for (const auto& r : run.results) {
    if (r.status == SolveStatus::kConverged) ++converged;
    code = std::max(code, exit_code(r.status, r.error));
  }
  std::printf("%d windows, %d converged, rmse %.6g\n",
              static_cast<int>(run.results.size()), converged, run.rmse());
  return code;
}

int run_sweep(const SolverFlags& flags, const std::string& list,
              std::optional<int> window_end, int iterations,
              const std::string& out) {
  const Scenario scenario = read_scenario_json(flags.scenario);
  const EstimatorConfig cfg = flags.config();
  std::vector<int> ns;
  for (double v : parse_list(list, "--sub-windows")) ns.push_back(static_cast<int>(v));
  const auto rows = sweep_subwindows(scenario, window_end.value_or(cfg.horizon),
                                     ns, cfg, iterations);
  write_sweep_csv(out, rows);
  int code = kExitOk;
  for (const auto& row : rows) {
    std::printf("N=%d iterations_to_tol=%d final_error=%.3g %s\n", row.num_windows,
                row.iterations_to_tol, row.final_error, status_name(row.status));
    if (row.status == SolveStatus::kError) code = kExitNumerical;
  }
  return code;
}

int run_check() {
  bool ok = true;
  for (const auto& c : run_self_checks()) {
    std::printf("[%s] %s: %.3g (limit %.0e)\n", c.passed() ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.limit);
    ok = ok && c.passed();
  }
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-split distributed moving horizon estimation"};
  app.require_subcommand(1);

  ScenarioConfig sim;
  std::string control = "1.0,0.4", x0, sim_out;
  auto* simulate = app.add_subcommand("simulate", "Simulate the robot benchmark");
  simulate->add_option("--steps", sim.steps, "Simulation length K")->capture_default_str();
  simulate->add_option("--horizon", sim.horizon, "Window length L (K >= L)")
      ->capture_default_str();
  simulate->add_option("--control", control, "Constant input v,omega")->capture_default_str();
  simulate->add_option("--x0", x0, "Initial state phi,psi,theta");
  simulate->add_option("--sample-time", sim.sample_time, "T")->capture_default_str();
  simulate->add_option("--sigma-r", sim.noise.sigma_r, "Range noise std")->capture_default_str();
  simulate->add_option("--sigma-alpha", sim.noise.sigma_alpha, "Bearing noise std")
      ->capture_default_str();
  simulate->add_option("--seed", sim.noise.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "Scenario JSON")->required();

  SolverFlags solve_flags;
  std::optional<int> solve_end;
  std::string solve_log, solve_out;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one estimation window");
  solve_flags.add_to(solve_cmd, true);
  solve_cmd->add_option("--window-end", solve_end, "Window end l (default L)");
  solve_cmd->add_option("--sub-windows", solve_flags.sub_windows, "N")->capture_default_str();
  solve_cmd->add_option("--log", solve_log, "Convergence CSV");
  solve_cmd->add_option("--out", solve_out, "Result JSON");

  SolverFlags est_flags;
  est_flags.algorithm = "sa-aladin";
  std::string est_out;
  auto* estimate = app.add_subcommand("estimate", "Receding-horizon estimation");
  est_flags.add_to(estimate, true);
  estimate->add_option("--sub-windows", est_flags.sub_windows, "N")->capture_default_str();
  estimate->add_option("--out", est_out, "Estimates CSV")->required();

  SolverFlags sweep_flags;
  std::string sweep_list = "3,4,5,6", sweep_out;
  std::optional<int> sweep_end;
  int sweep_iters = 50;
  auto* sweep = app.add_subcommand("sweep", "Fixed-iteration sweep over N");
  sweep_flags.add_to(sweep, false);
  sweep->add_option("--sub-windows", sweep_list, "Comma-separated N values")
      ->capture_default_str();
  sweep->add_option("--iters", sweep_iters, "Outer iterations per N")->capture_default_str();
  sweep->add_option("--window-end", sweep_end, "Window end l (default L)");
  sweep->add_option("--out", sweep_out, "Sweep CSV")->required();

  auto* check = app.add_subcommand("check", "Run derivative, QP and split self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim, control, x0, sim_out);
    if (solve_cmd->parsed()) return run_solve(solve_flags, solve_end, solve_log, solve_out);
    if (estimate->parsed()) return run_estimate(est_flags, est_out);
    if (sweep->parsed()) {
      return run_sweep(sweep_flags, sweep_list, sweep_end, sweep_iters, sweep_out);
    }
    if (check->parsed()) return run_check();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_numerical(e.code()) ? kExitNumerical : kExitInput;
  }
  return kExitInput;
}
