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

#ifndef TSMHE_MODEL_H_
#define TSMHE_MODEL_H_

#include <cstdint>
#include <memory>
#include <random>

#include <Eigen/Dense>

namespace tsmhe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Discrete-time system x+ = f(x, u), y = h(x).
//
// Implementations supply first derivatives and the curvature contractions
// d2f(x, u, w) = d^2/dx^2 (w . f(x, u)) and d2h(x, w) = d^2/dx^2 (w . h(x)).
// The control enters only as a known constant, so no u-curvature is needed.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual int nx() const = 0;
  virtual int nu() const = 0;
  virtual int ny() const = 0;
  virtual double sample_time() const = 0;

  virtual Vector f(const Vector& x, const Vector& u) const = 0;
  virtual Vector h(const Vector& x) const = 0;

  virtual Matrix df_dx(const Vector& x, const Vector& u) const = 0;
  virtual Matrix df_du(const Vector& x, const Vector& u) const = 0;
  virtual Matrix dh_dx(const Vector& x) const = 0;

  virtual Matrix d2f(const Vector& x, const Vector& u,
                     const Vector& w) const = 0;
  virtual Matrix d2h(const Vector& x, const Vector& w) const = 0;
};

// Differential-drive robot with state (phi, psi, theta), input (v, omega)
// and range/bearing observation of the position relative to the origin.
class DiffDriveRobot final : public SystemModel {
 public:
  static constexpr double kDefaultSampleTime = 0.2;
  static constexpr double kDefaultOriginEps = 1e-12;

  explicit DiffDriveRobot(double sample_time = kDefaultSampleTime,
                          double origin_eps = kDefaultOriginEps);

  int nx() const override { return 3; }
  int nu() const override { return 2; }
  int ny() const override { return 2; }
  double sample_time() const override { return sample_time_; }
  double origin_eps() const { return origin_eps_; }

  Vector f(const Vector& x, const Vector& u) const override;
  // Range and quadrant-aware bearing atan2(psi, phi). Throws
  // ErrorCode::kOriginSingularity when phi^2 + psi^2 < origin_eps.
  Vector h(const Vector& x) const override;

  Matrix df_dx(const Vector& x, const Vector& u) const override;
  Matrix df_du(const Vector& x, const Vector& u) const override;
  Matrix dh_dx(const Vector& x) const override;
  Matrix d2f(const Vector& x, const Vector& u, const Vector& w) const override;
  Matrix d2h(const Vector& x, const Vector& w) const override;

 private:
  double check_radius_sq(const Vector& x) const;

  double sample_time_;
  double origin_eps_;
};

// x+ = A x + B u, y = C x. Used for linear-Gaussian checks and toy models.
class LinearModel final : public SystemModel {
 public:
  LinearModel(Matrix a, Matrix b, Matrix c, double sample_time = 1.0);

  int nx() const override { return static_cast<int>(a_.rows()); }
  int nu() const override { return static_cast<int>(b_.cols()); }
  int ny() const override { return static_cast<int>(c_.rows()); }
  double sample_time() const override { return sample_time_; }

  Vector f(const Vector& x, const Vector& u) const override;
  Vector h(const Vector& x) const override;
  Matrix df_dx(const Vector& x, const Vector& u) const override;
  Matrix df_du(const Vector& x, const Vector& u) const override;
  Matrix dh_dx(const Vector& x) const override;
  Matrix d2f(const Vector& x, const Vector& u, const Vector& w) const override;
  Matrix d2h(const Vector& x, const Vector& w) const override;

 private:
  Matrix a_, b_, c_;
  double sample_time_;
};

// Thin wrappers matching the operation names used throughout the toolkit.
Vector step_dynamics(const SystemModel& model, const Vector& x,
                     const Vector& u);
Vector observe(const SystemModel& model, const Vector& x);

struct ModelJacobians {
  Matrix df_dx;
  Matrix dh_dx;
};
ModelJacobians jacobians(const SystemModel& model, const Vector& x,
                         const Vector& u);

// Draws points from the box [-sample_box, sample_box] (states and inputs;
// re-drawn if h is singular there) and compares analytic first and second
// derivatives to central differences with step eps. Returns the largest
// relative error ||analytic - fd||_inf / (1 + ||fd||_inf).
double fd_check(const SystemModel& model, int num_points, double eps,
                std::uint64_t seed = 7, double sample_box = 3.0);

struct NoiseSpec {
  static constexpr double kDefaultSigmaRange = 0.05;
  static constexpr double kDefaultSigmaBearing = 0.01;

  double sigma_r = kDefaultSigmaRange;
  double sigma_alpha = kDefaultSigmaBearing;
  std::uint64_t seed = 1;
};

// Deterministic standard-normal source: std::mt19937_64 (fully specified by
// the standard) feeding a Box-Muller transform. Uniforms use the top 53 bits
// of each draw, u = (k + 0.5) / 2^53, so u is never 0 or 1. Both values of
// each Box-Muller pair are used, cosine branch first.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next();

 private:
  double uniform();

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tsmhe

#endif  // TSMHE_MODEL_H_
