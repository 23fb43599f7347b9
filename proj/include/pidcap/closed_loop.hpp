// Copyright 2026 The pidcap Authors
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

#pragma once

#include <cmath>
#include <utility>

#include "pidcap/error.hpp"
#include "pidcap/plants.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// Unit-mass body under PID regulation, integrated in physical coordinates
/// (y0, x1, x2) with y0 the running integral of the error e = x1 - y*:
///
///   y0' = x1 - y*
///   x1' = x2
///   x2' = f(x1, x2) + kp (x1 - y*) + ki y0 + kd x2
class SecondOrderLoop {
 public:
  SecondOrderLoop(PlantFunction plant, PidGains gains, Vec setpoint)
      : plant_(std::move(plant)), gains_(gains), setpoint_(std::move(setpoint)) {
    if (setpoint_.size() != plant_.dim_n) throw Error(ErrorCode::BadParams, "setpoint dimension mismatch");
  }

  int dim_n() const noexcept { return plant_.dim_n; }
  int state_dim() const noexcept { return 3 * plant_.dim_n; }
  const PlantFunction& plant() const noexcept { return plant_; }
  const PidGains& gains() const noexcept { return gains_; }
  const Vec& setpoint() const noexcept { return setpoint_; }

  Vec field(const Vec& state) const {
    const int n = dim_n();
    const auto y0 = state.segment(0, n);
    const auto x1 = state.segment(n, n);
    const auto x2 = state.segment(2 * n, n);
    Vec out(3 * n);
    out.segment(0, n) = x1 - setpoint_;
    out.segment(n, n) = x2;
    out.segment(2 * n, n) = plant_(x1, x2) + gains_.kp * (x1 - setpoint_) + gains_.ki * y0 + gains_.kd * x2;
    return out;
  }

  Vec operator()(const Vec& state) const { return field(state); }

  /// Fixed point (-f(y*, 0)/ki, y*, 0); needs ki != 0.
  Vec equilibrium() const {
    if (gains_.ki == 0.0) throw Error(ErrorCode::ShiftUndefined, "equilibrium needs ki != 0");
    const int n = dim_n();
    Vec eq(3 * n);
    eq.segment(0, n) = -plant_(setpoint_, Vec::Zero(n)) / gains_.ki;
    eq.segment(n, n) = setpoint_;
    eq.segment(2 * n, n).setZero();
    return eq;
  }

 private:
  PlantFunction plant_;
  PidGains gains_;
  Vec setpoint_;
};

/// The same loop in error coordinates (y0 shifted, y1 = e, y2 = e') with the
/// shifted nonlinearity g; the origin is the equilibrium.
inline Vec shifted_second_order_field(const PlantFunction& g, const PidGains& gains, const Vec& Y) {
  const int n = g.dim_n;
  Vec out(3 * n);
  out.segment(0, n) = Y.segment(n, n);
  out.segment(n, n) = Y.segment(2 * n, n);
  out.segment(2 * n, n) = g(Y.segment(n, n), Y.segment(2 * n, n)) + gains.ki * Y.segment(0, n) +
                          gains.kp * Y.segment(n, n) + gains.kd * Y.segment(2 * n, n);
  return out;
}

/// Scalar PID loop around the superlinear force ||x||^{1+eps}, in error
/// coordinates (y0 = int e, y1 = e, y2 = e').
class SuperlinearLoop {
 public:
  SuperlinearLoop(double epsilon, PidGains gains, double setpoint)
      : epsilon_(epsilon), gains_(gains), setpoint_(setpoint) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw Error(ErrorCode::ParameterOutOfRange, "superlinear loop needs eps > 0");
    }
  }

  double epsilon() const noexcept { return epsilon_; }
  const PidGains& gains() const noexcept { return gains_; }
  double setpoint() const noexcept { return setpoint_; }

  /// ((y1 + y*)^2 + y2^2)^{(1+eps)/2}
  double force(double y1, double y2) const {
    const double shifted = y1 + setpoint_;
    return detail::clamped_power(shifted * shifted + y2 * y2, 0.5 * (1.0 + epsilon_));
  }

  Vec field(const Vec& y) const {
    Vec out(3);
    out(0) = y(1);
    out(1) = y(2);
    out(2) = force(y(1), y(2)) + gains_.ki * y(0) + gains_.kp * y(1) + gains_.kd * y(2);
    return out;
  }

  Vec operator()(const Vec& y) const { return field(y); }

 private:
  double epsilon_;
  PidGains gains_;
  double setpoint_;
};

/// Third-order chain closed by PID with the linear feedthrough f = c x3.
///
/// With ki != 0 the state is (y0, y1, y2, y3) = (int e, e, e', e'') and the
/// last row of the companion matrix is (ki, kp, kd, c). With ki == 0 the
/// integral state drops out and the reduced loop on (y1, y2, y3) has last
/// row (kp, kd, c). Either way trace(A) = c.
class ThirdOrderLoop {
 public:
  ThirdOrderLoop(PidGains gains, double c, bool reduced = false) : gains_(gains), c_(c), reduced_(reduced) {
    const Eigen::Index d = reduced ? 3 : 4;
    A_ = Mat::Zero(d, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) A_(i, i + 1) = 1.0;
    if (reduced) {
      A_.row(2) << gains.kp, gains.kd, c;
    } else {
      A_.row(3) << gains.ki, gains.kp, gains.kd, c;
    }
  }

  /// Picks the reduced form exactly when ki == 0.
  static ThirdOrderLoop for_gains(PidGains gains, double c) { return ThirdOrderLoop(gains, c, gains.ki == 0.0); }

  bool reduced() const noexcept { return reduced_; }
  int state_dim() const noexcept { return static_cast<int>(A_.rows()); }
  /// Index of e = x1 - y* in the state vector.
  int error_index() const noexcept { return reduced_ ? 0 : 1; }
  double c() const noexcept { return c_; }
  const PidGains& gains() const noexcept { return gains_; }
  const Mat& companion() const noexcept { return A_; }

  Vec field(const Vec& y) const { return A_ * y; }
  Vec operator()(const Vec& y) const { return field(y); }

 private:
  PidGains gains_;
  double c_;
  bool reduced_;
  Mat A_;
};

/// (0, x1(0), x2(0)): the integral of the error always starts at zero.
inline Vec initial_state_from_physical(const Vec& x1_0, const Vec& x2_0, const Vec& setpoint) {
  const auto n = x1_0.size();
  if (x2_0.size() != n || setpoint.size() != n) throw Error(ErrorCode::BadParams, "initial state dimension mismatch");
  Vec state(3 * n);
  state.segment(0, n).setZero();
  state.segment(n, n) = x1_0;
  state.segment(2 * n, n) = x2_0;
  return state;
}

/// Error coordinates (int e, e, e') of a physical state.
inline Vec error_coordinates(const Vec& physical, const Vec& setpoint) {
  const auto n = setpoint.size();
  Vec out = physical;
  out.segment(n, n) -= setpoint;
  return out;
}

}  // namespace pidcap
