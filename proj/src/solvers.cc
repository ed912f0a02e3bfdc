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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "tsmhe/parallel.h"
#include "tsmhe/qp_core.h"

namespace tsmhe {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double max_inf(const BlockVector& a, const BlockVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double inf_norm(const Vector& v) {
  return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

// Shared state and bookkeeping of one solver run.
class Run {
 public:
  Run(const MheInstance& instance, const Partition& partition,
      const SolverConfig& cfg, const RunOptions& options)
      : instance_(instance),
        partition_(partition),
        cfg_(cfg),
        options_(options),
        subs_(split_instance(instance, partition)),
        start_(Clock::now()) {
    cfg_.validate();
    const int n = partition.num_windows;
    couplings_.resize(n);
    for (int i = 0; i < n; ++i) couplings_[i] = dense_coupling(subs_[i]);
    if (options.warm_start != nullptr) {
      state_ = *options.warm_start;
      state_.iter = 0;
      check_state();
    } else {
      state_.y = lift_initial_guess(instance.initial_guess, partition);
      state_.x = state_.y;
      state_.lambda = Vector::Zero(partition.coupling_rows);
      state_.mu.resize(n);
      for (int i = 0; i < n; ++i) {
        state_.mu[i] = Vector::Zero(partition.num_constraints(i));
      }
    }
    if (state_.x.empty()) state_.x = state_.y;
    result_.algorithm = cfg.algorithm;
    result_.num_windows = n;
  }

  int size() const { return partition_.num_windows; }
  const SubProblem& sub(int i) const { return subs_[i]; }
  const SolverConfig& cfg() const { return cfg_; }
  IterateState& state() { return state_; }
  SolveResult& result() { return result_; }

  double regularization() const {
    return cfg_.qp_regularization > 0.0 ? cfg_.qp_regularization : cfg_.rho;
  }

  template <class Fn>
  void for_each_block(Fn&& fn) {
    parallel_for(size(), cfg_.workers, fn);
  }

  // QP block from a Hessian, gradient and constraint data at `point`.
  QpBlock make_block(int i, Matrix hessian, Vector gradient,
                     const ConstraintEval& c, bool with_offset,
                     const Vector& point) const {
    QpBlock b;
    b.hessian = std::move(hessian);
    b.gradient = std::move(gradient);
    b.constraint_jacobian = c.jacobian;
    b.constraint_offset =
        with_offset ? c.value : Vector::Zero(c.value.size());
    b.coupling = couplings_[i];
    b.anchor = couplings_[i] * point;
    return b;
  }

  // Coordination QP; blocks whose Hessian does not factor are regularized
  // (x10 per attempt, at most three times) before giving up.
  QpSolution coordinate(std::vector<QpBlock>& blocks) {
    QpOptions qp_options;
    qp_options.workers = cfg_.workers;
    std::vector<int> attempts(blocks.size(), 0);
    for (;;) {
      try {
        return solve_coupled_qp(blocks, qp_options);
      } catch (const Error& e) {
        const int b = e.block();
        if (e.code() != ErrorCode::kNotPositiveDefinite || b < 0 ||
            attempts[b] >= 3) {
          throw;
        }
        blocks[b].hessian.diagonal().array() +=
            regularization() * std::pow(10.0, attempts[b]);
        ++attempts[b];
      }
    }
  }

  // Metrics of the output iterate y with multipliers (mu, lambda).
  ConvergenceRecord measure(const BlockVector& y_new, const BlockVector& y_old,
                            const BlockVector& mu, const Vector& lambda,
                            double coupling_inf) {
    ConvergenceRecord rec;
    rec.iter = state_.iter;
    rec.primal_step_inf = max_inf(y_new, y_old);
    rec.coupling_inf = coupling_inf;
    std::vector<double> dyn(size()), stat(size()), obj(size());
    for_each_block([&](int i) {
      const ResidualEval r = eval_residual_stack(subs_[i], y_new[i]);
      const ConstraintEval c = eval_constraints(subs_[i], y_new[i]);
      dyn[i] = inf_norm(c.value);
      stat[i] = inf_norm(r.jacobian.transpose() * r.residual +
                         c.jacobian.transpose() * mu[i] +
                         couplings_[i].transpose() * lambda);
      obj[i] = 0.5 * r.residual.squaredNorm();
    });
    for (int i = 0; i < size(); ++i) {
      rec.dynamics_inf = std::max(rec.dynamics_inf, dyn[i]);
      rec.stationarity_inf = std::max(rec.stationarity_inf, stat[i]);
      rec.objective += obj[i];
    }
    if (options_.reference != nullptr) {
      rec.distance_to_reference = trajectory_distance(
          extract_trajectory(y_new, partition_).trajectory,
          *options_.reference);
    }
    return rec;
  }

  // Appends the record; returns true when the loop should stop.
  bool finish_iteration(ConvergenceRecord rec, double local_ms, double qp_ms) {
    if (cfg_.record_timing) {
      rec.local_ms = local_ms;
      rec.qp_ms = qp_ms;
      rec.wall_ms = elapsed_ms(start_);
    }
    const bool done = termination_check(rec, cfg_) == Termination::kConverged;
    result_.records.push_back(rec);
    result_.iterations = state_.iter;
    if (done) result_.status = SolveStatus::kConverged;
    return done && cfg_.stop_at_tol;
  }

  // Drives `iteration` until termination and packages the result.
  SolveResult execute(const std::function<void()>& prologue,
                      const std::function<bool()>& iteration) {
    result_.status = SolveStatus::kMaxIter;
    try {
      if (prologue) prologue();
      while (state_.iter < cfg_.max_iter) {
        ++state_.iter;
        result_.status = SolveStatus::kMaxIter;
        if (iteration()) break;
      }
    } catch (const Error& e) {
      result_.status = SolveStatus::kError;
      result_.error = e.code();
      result_.message = std::string(algorithm_name(cfg_.algorithm)) +
                        " iteration " + std::to_string(state_.iter) + ": " +
                        e.what();
    }
    result_.state = state_;
    try {
      result_.trajectory = extract_trajectory(state_.y, partition_).trajectory;
      result_.objective = centralized_objective(instance_, result_.trajectory);
    } catch (const Error& e) {
      result_.status = SolveStatus::kError;
      result_.error = e.code();
      if (result_.message.empty()) result_.message = e.what();
    }
    return std::move(result_);
  }

 private:
  void check_state() const {
    const int n = partition_.num_windows;
    bool ok = static_cast<int>(state_.y.size()) == n &&
              static_cast<int>(state_.mu.size()) == n &&
              state_.lambda.size() == partition_.coupling_rows &&
              (state_.x.empty() || static_cast<int>(state_.x.size()) == n);
    for (int i = 0; ok && i < n; ++i) {
      ok = state_.y[i].size() == partition_.num_vars(i) &&
           state_.mu[i].size() == partition_.num_constraints(i) &&
           (state_.x.empty() || state_.x[i].size() == partition_.num_vars(i));
    }
    if (!ok) throw Error(ErrorCode::kDimensionMismatch, "warm start shape");
  }

  const MheInstance& instance_;
  const Partition& partition_;
  SolverConfig cfg_;
  RunOptions options_;
  std::vector<SubProblem> subs_;
  std::vector<Matrix> couplings_;
  IterateState state_;
  SolveResult result_;
  Clock::time_point start_;
};

void expect_algorithm(const SolverConfig& cfg, Algorithm a) {
  if (cfg.algorithm != a) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("config is for ") + algorithm_name(cfg.algorithm) +
                    ", expected " + algorithm_name(a));
  }
}

// Shared by distributed SQP and the centralized baseline.
SolveResult sqp_loop(const MheInstance& instance, const Partition& partition,
                     const SolverConfig& cfg, const RunOptions& options) {
  Run run(instance, partition, cfg, options);
  auto iteration = [&]() -> bool {
    IterateState& st = run.state();
    const int n = run.size();
    const auto t0 = Clock::now();
    std::vector<QpBlock> blocks(n);
    run.for_each_block([&](int i) {
      const SubProblem& sub = run.sub(i);
      const ConstraintEval c = eval_constraints(sub, st.y[i]);
      blocks[i] = run.make_block(
          i, lagrangian_hessian(sub, st.y[i], st.mu[i], cfg.rho, cfg.hessian_mode),
          sub_gradient(sub, st.y[i]), c, true, st.y[i]);
    });
    const double local_ms = elapsed_ms(t0);
    const auto t1 = Clock::now();
    const QpSolution qp = run.coordinate(blocks);
    BlockVector y_new(n);
    for (int i = 0; i < n; ++i) y_new[i] = st.y[i] + qp.delta[i];
    const double qp_ms = elapsed_ms(t1);

    ConvergenceRecord rec = run.measure(
        y_new, st.y, qp.mu, qp.lambda,
        inf_norm(coupling_residual(partition, y_new)));
    st.y = std::move(y_new);
    st.x = st.y;
    st.mu = qp.mu;
    st.lambda = qp.lambda;
    return run.finish_iteration(rec, local_ms, qp_ms);
  };
  return run.execute(nullptr, iteration);
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kGaussNewtonAladin:
      return "gn-aladin";
    case Algorithm::kSensitivityAladin:
      return "sa-aladin";
    case Algorithm::kDistributedSqp:
      return "dsqp";
    case Algorithm::kCentralized:
      return "centralized";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kGaussNewtonAladin,
                      Algorithm::kSensitivityAladin, Algorithm::kDistributedSqp,
                      Algorithm::kCentralized}) {
    if (name == algorithm_name(a)) return a;
  }
  return std::nullopt;
}

const char* hessian_mode_name(HessianMode mode) {
  return mode == HessianMode::kGaussNewton ? "gauss-newton" : "exact";
}

std::optional<HessianMode> parse_hessian_mode(std::string_view name) {
  if (name == "gauss-newton") return HessianMode::kGaussNewton;
  if (name == "exact") return HessianMode::kExactLagrangian;
  return std::nullopt;
}

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIter:
      return "max_iter";
    case SolveStatus::kError:
      return "error";
  }
  return "unknown";
}

SolverConfig SolverConfig::defaults(Algorithm algorithm) {
  SolverConfig cfg;
  cfg.algorithm = algorithm;
  cfg.hessian_mode = HessianMode::kGaussNewton;
  switch (algorithm) {
    case Algorithm::kGaussNewtonAladin:
      cfg.rho = 25.0;
      break;
    case Algorithm::kCentralized:
      cfg.rho = 1.0;
      break;
    default:
      cfg.rho = 1e3;
  }
  if (algorithm == Algorithm::kSensitivityAladin) {
    cfg.qp_regularization = kAladinQpRegularization;
  }
  return cfg;
}

void SolverConfig::validate() const {
  if (!(rho > 0.0) || !(tol > 0.0) || max_iter < 0 || !(local.inner_tol > 0.0) ||
      local.inner_max_iter < 1 || !(switch_tol >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid solver configuration");
  }
}

Termination termination_check(const ConvergenceRecord& record,
                              const SolverConfig& cfg) {
  const double worst = std::max({record.primal_step_inf, record.coupling_inf,
                                 record.dynamics_inf, record.stationarity_inf});
  return worst <= cfg.tol ? Termination::kConverged : Termination::kContinue;
}

SolveResult run_gauss_newton_aladin(const MheInstance& instance,
                                    const Partition& partition,
                                    const SolverConfig& cfg,
                                    const RunOptions& options) {
  expect_algorithm(cfg, Algorithm::kGaussNewtonAladin);
  Run run(instance, partition, cfg, options);
  auto iteration = [&]() -> bool {
    IterateState& st = run.state();
    const int n = run.size();
    const auto t0 = Clock::now();
    std::vector<LocalSolution> local(n);
    std::vector<QpBlock> blocks(n);
    run.for_each_block([&](int i) {
      const SubProblem& sub = run.sub(i);
      local[i] = solve_local_subproblem(sub, st.lambda, st.y[i], cfg.rho,
                                        cfg.local, st.y[i]);
      const ResidualEval r = eval_residual_stack(sub, local[i].x);
      const ConstraintEval c = eval_constraints(sub, local[i].x);
      Matrix hess = r.jacobian.transpose() * r.jacobian;
      hess.diagonal().array() += run.regularization();
      // Local constraints hold at the local solution, so no offset.
      blocks[i] = run.make_block(i, std::move(hess),
                                 r.jacobian.transpose() * r.residual, c, false,
                                 local[i].x);
    });
    const double local_ms = elapsed_ms(t0);
    for (const auto& l : local) {
      ++run.result().exact_local_solves;
      if (!l.converged) ++run.result().inner_failures;
    }
    const auto t1 = Clock::now();
    const QpSolution qp = run.coordinate(blocks);
    BlockVector x_new(n), y_new(n);
    for (int i = 0; i < n; ++i) {
      x_new[i] = local[i].x;
      y_new[i] = local[i].x + qp.delta[i];
    }
    const double qp_ms = elapsed_ms(t1);

    ConvergenceRecord rec = run.measure(
        y_new, st.y, qp.mu, qp.lambda,
        inf_norm(coupling_residual(partition, x_new)));
    st.x = std::move(x_new);
    st.y = std::move(y_new);
    st.mu = qp.mu;
    st.lambda = qp.lambda;
    return run.finish_iteration(rec, local_ms, qp_ms);
  };
  return run.execute(nullptr, iteration);
}

SolveResult run_sensitivity_aladin(const MheInstance& instance,
                                   const Partition& partition,
                                   const SolverConfig& cfg,
                                   const RunOptions& options) {
  expect_algorithm(cfg, Algorithm::kSensitivityAladin);
  Run run(instance, partition, cfg, options);
  const int n = run.size();
  // Local KKT pair s_i = (X_i, mu_i) and the parameters xi_i = (Y_i, lambda)
  // it was computed for.
  BlockVector local_mu = run.state().mu;

  auto exact_update = [&](int i, const Vector& lambda, const Vector& y) {
    const LocalSolution sol = solve_local_subproblem(
        run.sub(i), lambda, y, cfg.rho, cfg.local, run.state().x[i],
        local_mu[i]);
    run.state().x[i] = sol.x;
    local_mu[i] = sol.mu;
    return sol.converged;
  };

  auto prologue = [&]() {
    if (!cfg.exact_first_iteration) return;
    std::vector<char> ok(n, 1);
    run.for_each_block([&](int i) {
      ok[i] = exact_update(i, run.state().lambda, run.state().y[i]);
    });
    for (int i = 0; i < n; ++i) {
      ++run.result().exact_local_solves;
      if (!ok[i]) ++run.result().inner_failures;
    }
  };

  auto iteration = [&]() -> bool {
    IterateState& st = run.state();
    const auto t0 = Clock::now();
    std::vector<QpBlock> blocks(n);
    run.for_each_block([&](int i) {
      const SubProblem& sub = run.sub(i);
      const ConstraintEval c = eval_constraints(sub, st.x[i]);
      blocks[i] = run.make_block(
          i,
          lagrangian_hessian(sub, st.x[i], local_mu[i], run.regularization(),
                             cfg.hessian_mode),
          sub_gradient(sub, st.x[i]), c, true, st.x[i]);
    });
    double local_ms = elapsed_ms(t0);
    const auto t1 = Clock::now();
    const QpSolution qp = run.coordinate(blocks);
    BlockVector y_new(n);
    for (int i = 0; i < n; ++i) y_new[i] = st.x[i] + qp.delta[i];
    const double qp_ms = elapsed_ms(t1);

    // Local primal-dual update for the new parameters (y_new, lambda).
    const auto t2 = Clock::now();
    enum class Kind { kPredictor, kExact, kFallback };
    std::vector<Kind> kind(n, Kind::kPredictor);
    std::vector<char> ok(n, 1);
    run.for_each_block([&](int i) {
      const SubProblem& sub = run.sub(i);
      const double post = kkt_residual(sub, st.x[i], local_mu[i], qp.lambda,
                                       y_new[i], cfg.rho);
      if (post <= cfg.switch_tol) {
        const int nv = sub.num_vars();
        Vector s(nv + sub.num_constraints());
        s << st.x[i], local_mu[i];
        Vector xi_old(nv + sub.coupling_rows), xi_new(nv + sub.coupling_rows);
        xi_old << st.y[i], st.lambda;
        xi_new << y_new[i], qp.lambda;
        try {
          const SensitivityPair pair = sensitivity_matrices(
              sub, st.x[i], local_mu[i], st.lambda, st.y[i], cfg.rho);
          std::optional<Vector> residual;
          if (cfg.corrected_predictor) {
            residual = kkt_vector(sub, st.x[i], local_mu[i], st.lambda,
                                  st.y[i], cfg.rho);
          }
          const Vector s_new = tangent_predictor(s, xi_old, xi_new, pair,
                                                 residual);
          st.x[i] = s_new.head(nv);
          local_mu[i] = s_new.tail(sub.num_constraints());
          return;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kSingularKkt) throw;
          kind[i] = Kind::kFallback;
        }
      } else {
        kind[i] = Kind::kExact;
      }
      ok[i] = exact_update(i, qp.lambda, y_new[i]);
    });
    local_ms += elapsed_ms(t2);
    for (int i = 0; i < n; ++i) {
      if (kind[i] == Kind::kPredictor) {
        ++run.result().predictor_steps;
      } else {
        ++run.result().exact_local_solves;
        if (kind[i] == Kind::kFallback) ++run.result().predictor_fallbacks;
        if (!ok[i]) ++run.result().inner_failures;
      }
    }

    ConvergenceRecord rec = run.measure(
        y_new, st.y, qp.mu, qp.lambda,
        inf_norm(coupling_residual(partition, y_new)));
    st.y = std::move(y_new);
    st.mu = qp.mu;
    st.lambda = qp.lambda;
    return run.finish_iteration(rec, local_ms, qp_ms);
  };
  return run.execute(prologue, iteration);
}

SolveResult run_distributed_sqp(const MheInstance& instance,
                                const Partition& partition,
                                const SolverConfig& cfg,
                                const RunOptions& options) {
  expect_algorithm(cfg, Algorithm::kDistributedSqp);
  return sqp_loop(instance, partition, cfg, options);
}

SolveResult run_centralized(const MheInstance& instance,
                            const SolverConfig& cfg,
                            const RunOptions& options) {
  expect_algorithm(cfg, Algorithm::kCentralized);
  instance.validate();
  const Partition single =
      build_partition(instance.horizon, 1, instance.model->nx());
  return sqp_loop(instance, single, cfg, options);
}

SolveResult solve(const MheInstance& instance, const Partition& partition,
                  const SolverConfig& cfg, const RunOptions& options) {
  switch (cfg.algorithm) {
    case Algorithm::kGaussNewtonAladin:
      return run_gauss_newton_aladin(instance, partition, cfg, options);
    case Algorithm::kSensitivityAladin:
      return run_sensitivity_aladin(instance, partition, cfg, options);
    case Algorithm::kDistributedSqp:
      return run_distributed_sqp(instance, partition, cfg, options);
    case Algorithm::kCentralized:
      return run_centralized(instance, cfg, options);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown algorithm");
}

IterateState lift_solution(const Trajectory& trajectory,
                           const Vector& central_mu,
                           const Partition& partition) {
  IterateState st;
  st.y = lift_initial_guess(trajectory, partition);
  st.x = st.y;
  LiftedDuals duals = lift_multipliers(central_mu, partition);
  st.lambda = std::move(duals.lambda);
  st.mu = std::move(duals.mu);
  return st;
}

}  // namespace tsmhe
