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
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "pidcap/error.hpp"

namespace pidcap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Design eigenvalues of the closed-loop characteristic cubic. Ordering
/// matters: the third entry plays a distinguished role in the region test.
struct EigenTriple {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;

  bool finite() const noexcept {
    return std::isfinite(lambda1) && std::isfinite(lambda2) && std::isfinite(lambda3);
  }
  double operator[](int i) const noexcept { return i == 0 ? lambda1 : (i == 1 ? lambda2 : lambda3); }
  friend bool operator==(const EigenTriple&, const EigenTriple&) = default;
};

/// u = kp e + ki \int e + kd de/dt
struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;

  bool finite() const noexcept {
    return std::isfinite(kp) && std::isfinite(ki) && std::isfinite(kd);
  }
  friend bool operator==(const PidGains&, const PidGains&) = default;
};

/// Global Lipschitz constant of a plant nonlinearity (Euclidean norms).
class LipschitzBound {
 public:
  constexpr LipschitzBound() = default;
  explicit LipschitzBound(double value) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(ErrorCode::ParameterOutOfRange,
                  "Lipschitz bound must be finite and nonnegative, got " + std::to_string(value));
    }
  }
  constexpr double value() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

}  // namespace pidcap
