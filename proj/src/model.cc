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

#include "tsmhe/model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "tsmhe/error.h"

namespace tsmhe {

// ---------------------------------------------------------------------------
// DiffDriveRobot

DiffDriveRobot::DiffDriveRobot(double sample_time, double origin_eps)
    : sample_time_(sample_time), origin_eps_(origin_eps) {
  if (!(sample_time > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample time must be positive");
  }
}

double DiffDriveRobot::check_radius_sq(const Vector& x) const {
  const double r2 = x(0) * x(0) + x(1) * x(1);
  if (!(r2 >= origin_eps_)) {
    throw Error(ErrorCode::kOriginSingularity,
                "range/bearing undefined at the origin");
  }
  return r2;
}

Vector DiffDriveRobot::f(const Vector& x, const Vector& u) const {
  Vector next(3);
  next << x(0) + sample_time_ * u(0) * std::cos(x(2)),
      x(1) + sample_time_ * u(0) * std::sin(x(2)),
      x(2) + sample_time_ * u(1);
  return next;
}

Vector DiffDriveRobot::h(const Vector& x) const {
  const double r2 = check_radius_sq(x);
  Vector y(2);
  y << std::sqrt(r2), std::atan2(x(1), x(0));
  return y;
}

Matrix DiffDriveRobot::df_dx(const Vector& x, const Vector& u) const {
  Matrix jac = Matrix::Identity(3, 3);
  jac(0, 2) = -sample_time_ * u(0) * std::sin(x(2));
  jac(1, 2) = sample_time_ * u(0) * std::cos(x(2));
  return jac;
}

Matrix DiffDriveRobot::df_du(const Vector& x, const Vector& /*u*/) const {
  Matrix jac = Matrix::Zero(3, 2);
  jac(0, 0) = sample_time_ * std::cos(x(2));
  jac(1, 0) = sample_time_ * std::sin(x(2));
  jac(2, 1) = sample_time_;
  return jac;
}

Matrix DiffDriveRobot::dh_dx(const Vector& x) const {
  const double r2 = check_radius_sq(x);
  const double r = std::sqrt(r2);
  Matrix jac = Matrix::Zero(2, 3);
  jac(0, 0) = x(0) / r;
  jac(0, 1) = x(1) / r;
  jac(1, 0) = -x(1) / r2;
  jac(1, 1) = x(0) / r2;
  return jac;
}

Matrix DiffDriveRobot::d2f(const Vector& x, const Vector& u,
                           const Vector& w) const {
  Matrix hess = Matrix::Zero(3, 3);
  hess(2, 2) = -sample_time_ * u(0) *
               (w(0) * std::cos(x(2)) + w(1) * std::sin(x(2)));
  return hess;
}

Matrix DiffDriveRobot::d2h(const Vector& x, const Vector& w) const {
  const double r2 = check_radius_sq(x);
  const double r = std::sqrt(r2);
  const double r3 = r2 * r;
  const double r4 = r2 * r2;
  const double p = x(0), q = x(1);
  Matrix hess = Matrix::Zero(3, 3);
  // range
  hess(0, 0) += w(0) * q * q / r3;
  hess(0, 1) += -w(0) * p * q / r3;
  hess(1, 1) += w(0) * p * p / r3;
  // bearing
  hess(0, 0) += w(1) * 2.0 * p * q / r4;
  hess(0, 1) += w(1) * (q * q - p * p) / r4;
  hess(1, 1) += -w(1) * 2.0 * p * q / r4;
  hess(1, 0) = hess(0, 1);
  return hess;
}

// ---------------------------------------------------------------------------
// LinearModel

LinearModel::LinearModel(Matrix a, Matrix b, Matrix c, double sample_time)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      sample_time_(sample_time) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows() ||
      c_.cols() != a_.rows() || a_.rows() < 1 || b_.cols() < 1 ||
      c_.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "inconsistent linear model");
  }
  if (!(sample_time > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample time must be positive");
  }
}

Vector LinearModel::f(const Vector& x, const Vector& u) const {
  return a_ * x + b_ * u;
}
Vector LinearModel::h(const Vector& x) const { return c_ * x; }
Matrix LinearModel::df_dx(const Vector&, const Vector&) const { return a_; }
Matrix LinearModel::df_du(const Vector&, const Vector&) const { return b_; }
Matrix LinearModel::dh_dx(const Vector&) const { return c_; }
Matrix LinearModel::d2f(const Vector&, const Vector&, const Vector&) const {
  return Matrix::Zero(nx(), nx());
}
Matrix LinearModel::d2h(const Vector&, const Vector&) const {
  return Matrix::Zero(nx(), nx());
}

// ---------------------------------------------------------------------------
// Operations

Vector step_dynamics(const SystemModel& model, const Vector& x,
                     const Vector& u) {
  return model.f(x, u);
}

Vector observe(const SystemModel& model, const Vector& x) {
  return model.h(x);
}

ModelJacobians jacobians(const SystemModel& model, const Vector& x,
                         const Vector& u) {
  return {model.df_dx(x, u), model.dh_dx(x)};
}

namespace {

// Central differences of a vector function. The denominator is the
// representable difference of the perturbed arguments, so affine maps with
// exactly representable coefficients differentiate without rounding error.
Matrix central_difference(const std::function<Vector(const Vector&)>& fn,
                          const Vector& at, double eps) {
  const Vector base = fn(at);
  Matrix jac(base.size(), at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    Vector plus = at, minus = at;
    plus(j) += eps;
    minus(j) -= eps;
    jac.col(j) = (fn(plus) - fn(minus)) / (plus(j) - minus(j));
  }
  return jac;
}

double relative_error(const Matrix& analytic, const Matrix& fd) {
  return (analytic - fd).lpNorm<Eigen::Infinity>() /
         (1.0 + fd.lpNorm<Eigen::Infinity>());
}

}  // namespace

double fd_check(const SystemModel& model, int num_points, double eps,
                std::uint64_t seed, double sample_box) {
  if (num_points < 1) {
    throw Error(ErrorCode::kInvalidArgument, "num_points must be >= 1");
  }
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> box(-sample_box, sample_box);
  auto draw = [&](int n) {
    Vector v(n);
    for (int k = 0; k < n; ++k) v(k) = box(engine);
    return v;
  };

  double worst = 0.0;
  for (int p = 0; p < num_points; ++p) {
    Vector x = draw(model.nx());
    // Keep away from observation singularities, where central differences
    // are dominated by truncation error rather than implementation bugs.
    bool usable = false;
    for (int attempt = 0; attempt < 100 && !usable; ++attempt) {
      try {
        model.h(x);
        usable = x.head(std::min(2, model.nx())).norm() > 0.25;
      } catch (const Error&) {
        usable = false;
      }
      if (!usable) x = draw(model.nx());
    }
    const Vector u = draw(model.nu());
    const Vector wf = draw(model.nx());
    const Vector wh = draw(model.ny());

    auto fx = [&](const Vector& z) { return model.f(z, u); };
    auto fu = [&](const Vector& z) { return model.f(x, z); };
    auto hx = [&](const Vector& z) { return model.h(z); };
    auto grad_wf = [&](const Vector& z) -> Vector {
      return model.df_dx(z, u).transpose() * wf;
    };
    auto grad_wh = [&](const Vector& z) -> Vector {
      return model.dh_dx(z).transpose() * wh;
    };

    worst = std::max(worst, relative_error(model.df_dx(x, u),
                                           central_difference(fx, x, eps)));
    worst = std::max(worst, relative_error(model.df_du(x, u),
                                           central_difference(fu, u, eps)));
    worst = std::max(worst, relative_error(model.dh_dx(x),
                                           central_difference(hx, x, eps)));
    worst = std::max(worst, relative_error(model.d2f(x, u, wf),
                                           central_difference(grad_wf, x, eps)));
    worst = std::max(worst, relative_error(model.d2h(x, wh),
                                           central_difference(grad_wh, x, eps)));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// GaussianSource

double GaussianSource::uniform() {
  const std::uint64_t k = engine_() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

double GaussianSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace tsmhe
