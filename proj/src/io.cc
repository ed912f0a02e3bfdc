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

#include "tsmhe/io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsmhe/error.h"

namespace tsmhe {
namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path + ": " + e.what());
  }
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json to_json(const Trajectory& t) {
  json a = json::array();
  for (const auto& v : t) a.push_back(to_json(v));
  return a;
}

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

Vector vector_from(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = j[k].get<double>();
  return v;
}

Trajectory trajectory_from(const json& j) {
  Trajectory t;
  for (const auto& row : j) t.push_back(vector_from(row));
  return t;
}

Matrix matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vector_from(j[r]).transpose();
  return m;
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_num(const std::string& s) {
  if (s == "nan") return std::nan("");
  return std::stod(s);
}

SolveStatus parse_status(const std::string& s) {
  if (s == "converged") return SolveStatus::kConverged;
  if (s == "max_iter") return SolveStatus::kMaxIter;
  if (s == "error") return SolveStatus::kError;
  throw Error(ErrorCode::kIo, "unknown status '" + s + "'");
}

}  // namespace

void write_scenario_json(const std::string& path, const Scenario& scenario) {
  json doc;
  doc["model"] = {{"T", scenario.sample_time},
                  {"sigma_r", scenario.noise.sigma_r},
                  {"sigma_alpha", scenario.noise.sigma_alpha},
                  {"seed", scenario.noise.seed}};
  doc["weights"] = {{"P", to_json(Matrix(Matrix::Identity(3, 3)))},
                    {"V", to_json(measurement_covariance(scenario.noise))}};
  doc["controls"] = to_json(scenario.controls);
  doc["true_states"] = to_json(scenario.true_states);
  doc["measurements"] = to_json(scenario.measurements);
  auto out = open_out(path);
  out << doc.dump(1) << '\n';
  finish(out, path);
}

Scenario read_scenario_json(const std::string& path) {
  const json doc = load_json(path);
  try {
    Scenario s;
    s.sample_time = doc.at("model").at("T").get<double>();
    s.noise.sigma_r = doc.at("model").at("sigma_r").get<double>();
    s.noise.sigma_alpha = doc.at("model").at("sigma_alpha").get<double>();
    s.noise.seed = doc.at("model").at("seed").get<std::uint64_t>();
    s.controls = trajectory_from(doc.at("controls"));
    s.true_states = trajectory_from(doc.at("true_states"));
    s.measurements = trajectory_from(doc.at("measurements"));
    if (s.true_states.size() != s.controls.size() + 1 ||
        s.measurements.size() != s.controls.size() + 1) {
      throw Error(ErrorCode::kIo, path + ": inconsistent scenario lengths");
    }
    for (const auto& x : s.true_states) {
      if (x.size() != 3) throw Error(ErrorCode::kIo, path + ": state size");
    }
    for (const auto& u : s.controls) {
      if (u.size() != 2) throw Error(ErrorCode::kIo, path + ": control size");
    }
    for (const auto& y : s.measurements) {
      if (y.size() != 2) throw Error(ErrorCode::kIo, path + ": measurement size");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path + ": " + e.what());
  }
}

ResultDocument make_result_document(const SolveResult& result,
                                    const EstimatorConfig& cfg,
                                    const MheInstance& instance,
                                    int window_end) {
  ResultDocument doc;
  doc.solver = cfg.solver;
  doc.num_windows = result.num_windows;
  doc.window_end = window_end;
  doc.horizon = instance.horizon;
  doc.prior_cov = instance.prior_cov;
  doc.meas_cov = instance.meas_cov;
  doc.status = result.status;
  doc.trajectory = result.trajectory;
  doc.objective = result.objective;
  doc.iterations = result.iterations;
  if (!result.records.empty()) {
    ConvergenceRecord last = result.records.back();
    last.wall_ms = last.local_ms = last.qp_ms = 0.0;
    doc.final_metrics = last;
  }
  doc.exact_local_solves = result.exact_local_solves;
  doc.predictor_steps = result.predictor_steps;
  doc.predictor_fallbacks = result.predictor_fallbacks;
  doc.inner_failures = result.inner_failures;
  doc.message = result.message;
  return doc;
}

void write_result_json(const std::string& path, const ResultDocument& doc) {
  json j;
  j["config"] = {{"algorithm", algorithm_name(doc.solver.algorithm)},
                 {"rho", doc.solver.rho},
                 {"tol", doc.solver.tol},
                 {"max_iter", doc.solver.max_iter},
                 {"hessian", hessian_mode_name(doc.solver.hessian_mode)},
                 {"sub_windows", doc.num_windows},
                 {"window_end", doc.window_end},
                 {"horizon", doc.horizon},
                 {"P", to_json(doc.prior_cov)},
                 {"V", to_json(doc.meas_cov)}};
  j["status"] = status_name(doc.status);
  j["trajectory"] = to_json(doc.trajectory);
  j["objective"] = doc.objective;
  j["iterations"] = doc.iterations;
  if (doc.final_metrics) {
    const ConvergenceRecord& r = *doc.final_metrics;
    j["final_metrics"] = {{"iter", r.iter},
                          {"primal_step_inf", r.primal_step_inf},
                          {"coupling_inf", r.coupling_inf},
                          {"dynamics_inf", r.dynamics_inf},
                          {"stationarity_inf", r.stationarity_inf},
                          {"dist_to_ref", r.distance_to_reference},
                          {"objective", r.objective}};
  } else {
    j["final_metrics"] = nullptr;
  }
  j["counters"] = {{"exact_local_solves", doc.exact_local_solves},
                   {"predictor_steps", doc.predictor_steps},
                   {"predictor_fallbacks", doc.predictor_fallbacks},
                   {"inner_failures", doc.inner_failures}};
  j["message"] = doc.message;
  auto out = open_out(path);
  out << j.dump(1) << '\n';
  finish(out, path);
}

ResultDocument read_result_json(const std::string& path) {
  const json j = load_json(path);
  try {
    ResultDocument doc;
    const json& c = j.at("config");
    const auto algorithm = parse_algorithm(c.at("algorithm").get<std::string>());
    const auto mode = parse_hessian_mode(c.at("hessian").get<std::string>());
    if (!algorithm || !mode) throw Error(ErrorCode::kIo, path + ": bad config");
    doc.solver = SolverConfig::defaults(*algorithm);
    doc.solver.hessian_mode = *mode;
    doc.solver.rho = c.at("rho").get<double>();
    doc.solver.tol = c.at("tol").get<double>();
    doc.solver.max_iter = c.at("max_iter").get<int>();
    doc.num_windows = c.at("sub_windows").get<int>();
    doc.window_end = c.at("window_end").get<int>();
    doc.horizon = c.at("horizon").get<int>();
    doc.prior_cov = matrix_from(c.at("P"));
    doc.meas_cov = matrix_from(c.at("V"));
    doc.status = parse_status(j.at("status").get<std::string>());
    doc.trajectory = trajectory_from(j.at("trajectory"));
    doc.objective = j.at("objective").get<double>();
    doc.iterations = j.at("iterations").get<int>();
    const json& m = j.at("final_metrics");
    if (!m.is_null()) {
      ConvergenceRecord r;
      r.iter = m.at("iter").get<int>();
      r.primal_step_inf = m.at("primal_step_inf").get<double>();
      r.coupling_inf = m.at("coupling_inf").get<double>();
      r.dynamics_inf = m.at("dynamics_inf").get<double>();
      r.stationarity_inf = m.at("stationarity_inf").get<double>();
      r.distance_to_reference = m.at("dist_to_ref").get<double>();
      r.objective = m.at("objective").get<double>();
      doc.final_metrics = r;
    }
    const json& k = j.at("counters");
    doc.exact_local_solves = k.at("exact_local_solves").get<int>();
    doc.predictor_steps = k.at("predictor_steps").get<int>();
    doc.predictor_fallbacks = k.at("predictor_fallbacks").get<int>();
    doc.inner_failures = k.at("inner_failures").get<int>();
    doc.message = j.at("message").get<std::string>();
    return doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path + ": " + e.what());
  }
}

void write_convergence_csv(const std::string& path,
                           const std::vector<ConvergenceRecord>& records) {
  auto out = open_out(path);
  out << kConvergenceHeader << '\n';
  for (const auto& r : records) {
    const double dist = r.distance_to_reference < 0.0 ? std::nan("")
                                                      : r.distance_to_reference;
    out << r.iter << ',' << num(r.primal_step_inf) << ','
        << num(r.coupling_inf) << ',' << num(r.dynamics_inf) << ','
        << num(r.stationarity_inf) << ',' << num(dist) << ','
        << num(r.objective) << ',' << num(r.wall_ms) << '\n';
  }
  finish(out, path);
}

void write_estimates_csv(const std::string& path, const HorizonRun& run) {
  auto out = open_out(path);
  out << kEstimatesHeader << '\n';
  for (const auto& e : run.estimates) {
    out << e.window_end;
    for (Eigen::Index k = 0; k < e.estimate.size(); ++k) out << ',' << num(e.estimate(k));
    for (Eigen::Index k = 0; k < e.truth.size(); ++k) out << ',' << num(e.truth(k));
    out << ',' << num(e.error) << ',' << status_name(e.status) << ','
        << e.iterations << '\n';
  }
  finish(out, path);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.num_windows << ',' << r.iterations_to_tol << ','
        << num(r.total_ms) << ',' << num(r.mean_local_ms) << ','
        << num(r.mean_qp_ms) << ',' << num(r.final_error) << ','
        << status_name(r.status) << '\n';
  }
  finish(out, path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading: " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, path + ": empty file");
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::kIo, path + ": ragged row");
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::vector<ConvergenceRecord> read_convergence_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::string header;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    header += (k ? "," : "") + t.header[k];
  }
  if (header != kConvergenceHeader) {
    throw Error(ErrorCode::kIo, path + ": unexpected header");
  }
  std::vector<ConvergenceRecord> out;
  try {
    for (const auto& row : t.rows) {
      ConvergenceRecord r;
      r.iter = std::stoi(row[0]);
      r.primal_step_inf = parse_num(row[1]);
      r.coupling_inf = parse_num(row[2]);
      r.dynamics_inf = parse_num(row[3]);
      r.stationarity_inf = parse_num(row[4]);
      const double dist = parse_num(row[5]);
      r.distance_to_reference = std::isnan(dist) ? -1.0 : dist;
      r.objective = parse_num(row[6]);
      r.wall_ms = parse_num(row[7]);
      out.push_back(r);
    }
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kIo, path + ": bad number (" + e.what() + ")");
  }
  return out;
}

}  // namespace tsmhe
