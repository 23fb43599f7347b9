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
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/SVD>

#include "pidcap/error.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// A plant nonlinearity f: R^{2n} -> R^n acting as the uncontrolled force on
/// a unit-mass body, evaluated at (position, velocity).
///
/// declared_L, when present, is a global Lipschitz constant in Euclidean
/// norms. Plants without one are not globally Lipschitz and are refused by
/// gain synthesis.
struct PlantFunction {
  int dim_n = 1;
  std::function<Vec(const Vec& position, const Vec& velocity)> evaluate;
  std::optional<double> declared_L;
  std::string label;

  bool globally_lipschitz() const noexcept { return declared_L.has_value(); }

  Vec operator()(const Vec& position, const Vec& velocity) const { return evaluate(position, velocity); }

  /// Evaluates on a stacked point (position; velocity) in R^{2n}.
  Vec at(const Vec& stacked) const { return evaluate(stacked.head(dim_n), stacked.tail(dim_n)); }
};

/// f: R^3 -> R acting on (x1, x2, x3) of a third-order chain of integrators.
struct ThirdOrderPlantFunction {
  std::function<double(const Eigen::Vector3d&)> evaluate;
  std::optional<double> declared_L;
  std::string label;

  double operator()(const Eigen::Vector3d& x) const { return evaluate(x); }
};

/// The linear feedthrough f(x) = c * x3, Lipschitz with constant |c|.
inline ThirdOrderPlantFunction feedthrough_plant(double c) {
  return {[c](const Eigen::Vector3d& x) { return c * x(2); }, std::abs(c), "feedthrough"};
}

using PlantParams = std::map<std::string, double>;

/// Linear plant f = A [x; v] with A of shape n x 2n; declared_L is the
/// spectral norm of A.
inline PlantFunction make_linear_plant(const Mat& A) {
  if (A.cols() != 2 * A.rows() || A.rows() == 0) {
    throw Error(ErrorCode::BadParams, "linear plant needs an n x 2n matrix");
  }
  const int n = static_cast<int>(A.rows());
  const double norm = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
  return {n,
          [A, n](const Vec& x, const Vec& v) -> Vec {
            return A.leftCols(n) * x + A.rightCols(n) * v;
          },
          norm, "linear"};
}

/// Componentwise alpha*sin(x_i) + beta*cos(v_i); Lipschitz with sqrt(alpha^2+beta^2).
inline PlantFunction make_sine_mix_plant(double alpha, double beta, int n = 1) {
  return {n,
          [alpha, beta](const Vec& x, const Vec& v) -> Vec {
            return alpha * x.array().sin() + beta * v.array().cos();
          },
          std::hypot(alpha, beta), "sine_mix"};
}

namespace detail {

inline double take(PlantParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double value = it->second;
  params.erase(it);
  if (!std::isfinite(value)) throw Error(ErrorCode::BadParams, "parameter " + key + " is not finite");
  return value;
}

inline int take_dim(PlantParams& params) {
  const double n = take(params, "n", 1.0);
  if (n < 1.0 || n != std::floor(n) || n > 1024.0) {
    throw Error(ErrorCode::BadParams, "n must be a positive integer");
  }
  return static_cast<int>(n);
}

inline void reject_leftovers(const PlantParams& params, const std::string& plant) {
  if (!params.empty()) {
    throw Error(ErrorCode::BadParams, "unknown parameter '" + params.begin()->first + "' for plant " + plant);
  }
}

/// ((x^2 + v^2))^{p/2} evaluated as exp(p/2 * ln(.)) with the base clamped
/// below by 1e-300; a zero base maps to exactly zero.
inline double clamped_power(double base, double half_power) {
  if (base <= 0.0) return 0.0;
  return std::exp(half_power * std::log(std::max(base, 1e-300)));
}

}  // namespace detail

/// Builds a plant from the built-in catalog:
///
///   zero           f = 0                                        {n}
///   linear         f = A [x; v], A entries a<i>_<j> (1-based)   {n, a1_1, ...}
///   sine_mix       f = alpha sin(x) + beta cos(v)               {alpha, beta, n}
///   pendulum       f = -(g/l) sin(x) - c v                      {g, l, c, n}
///   damped_spring  f = -k x - c v                               {k, c, n}
///   power_law      f = (x^2 + v^2)^{(1+eps)/2}, n = 1           {eps}
///
/// power_law carries no declared_L: it is the superlinear counterexample.
inline PlantFunction catalog_lookup(const std::string& name, PlantParams params = {}) {
  using detail::take;
  if (name == "zero") {
    const int n = detail::take_dim(params);
    detail::reject_leftovers(params, name);
    return {n, [n](const Vec&, const Vec&) -> Vec { return Vec::Zero(n); }, 0.0, "zero"};
  }
  if (name == "linear") {
    const int n = detail::take_dim(params);
    Mat A = Mat::Zero(n, 2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 2 * n; ++j) {
        A(i, j) = take(params, "a" + std::to_string(i + 1) + "_" + std::to_string(j + 1), 0.0);
      }
    }
    detail::reject_leftovers(params, name);
    return make_linear_plant(A);
  }
  if (name == "sine_mix") {
    const double alpha = take(params, "alpha", 1.0);
    const double beta = take(params, "beta", 0.0);
    const int n = detail::take_dim(params);
    detail::reject_leftovers(params, name);
    return make_sine_mix_plant(alpha, beta, n);
  }
  if (name == "pendulum") {
    const double g = take(params, "g", 9.81);
    const double l = take(params, "l", 1.0);
    const double c = take(params, "c", 0.0);
    const int n = detail::take_dim(params);
    detail::reject_leftovers(params, name);
    if (!(l > 0.0)) throw Error(ErrorCode::BadParams, "pendulum length l must be positive");
    const double w2 = g / l;
    return {n,
            [w2, c](const Vec& x, const Vec& v) -> Vec { return -w2 * x.array().sin() - c * v.array(); },
            std::hypot(w2, c), "pendulum"};
  }
  if (name == "damped_spring") {
    const double k = take(params, "k", 1.0);
    const double c = take(params, "c", 0.0);
    const int n = detail::take_dim(params);
    detail::reject_leftovers(params, name);
    return {n, [k, c](const Vec& x, const Vec& v) -> Vec { return -k * x - c * v; }, std::hypot(k, c),
            "damped_spring"};
  }
  if (name == "power_law") {
    const double eps = take(params, "eps", 1.0);
    const int n = detail::take_dim(params);
    detail::reject_leftovers(params, name);
    if (eps < 0.0) throw Error(ErrorCode::BadParams, "power_law needs eps >= 0");
    if (n != 1) throw Error(ErrorCode::BadParams, "power_law is scalar (n = 1)");
    const double half_power = 0.5 * (1.0 + eps);
    return {1,
            [half_power](const Vec& x, const Vec& v) -> Vec {
              Vec out(1);
              out(0) = detail::clamped_power(x(0) * x(0) + v(0) * v(0), half_power);
              return out;
            },
            std::nullopt, "power_law"};
  }
  throw Error(ErrorCode::UnknownPlant, "no catalog plant named '" + name + "'");
}

/// Sampled maximum of ||f(p) - f(q)|| / ||p - q|| over `samples` seeded pairs
/// in [-box_radius, box_radius]^{2n}. Every other pair is a local probe at
/// distance 1e-6. The result is an estimate >= sampled max, i.e. a lower
/// bound on the true constant, never a certificate.
inline double estimate_lipschitz(const PlantFunction& f, double box_radius, int samples, std::uint64_t seed) {
  if (samples < 2 || !(box_radius > 0.0)) {
    throw Error(ErrorCode::ParameterOutOfRange, "estimate_lipschitz needs samples >= 2 and box_radius > 0");
  }
  const int dim = 2 * f.dim_n;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-box_radius, box_radius);
  std::normal_distribution<double> gauss;
  constexpr double kProbe = 1e-6;

  double best = 0.0;
  Vec p(dim), q(dim), dir(dim);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < dim; ++i) p(i) = coord(rng);
    if (s % 2 == 0) {
      for (int i = 0; i < dim; ++i) q(i) = coord(rng);
    } else {
      for (int i = 0; i < dim; ++i) dir(i) = gauss(rng);
      q = p + kProbe * dir.normalized();
    }
    const double dist = (p - q).norm();
    if (dist == 0.0) continue;
    best = std::max(best, (f.at(p) - f.at(q)).norm() / dist);
  }
  return best;
}

/// g(y1, y2) = f(y1 + y*, y2) - f(y*, 0): the error-coordinate nonlinearity,
/// vanishing at the origin and sharing f's Lipschitz constant.
inline PlantFunction shift_nonlinearity(const PlantFunction& f, const Vec& setpoint) {
  if (setpoint.size() != f.dim_n) throw Error(ErrorCode::BadParams, "setpoint dimension mismatch");
  const Vec offset = f(setpoint, Vec::Zero(f.dim_n));
  PlantFunction g = f;
  g.label = "shift(" + f.label + ")";
  g.evaluate = [f, setpoint, offset](const Vec& y1, const Vec& y2) -> Vec { return f(y1 + setpoint, y2) - offset; };
  return g;
}

/// A random member of the Lipschitz class with declared constant in
/// [0.2 L, L]: either a Gaussian linear plant (stable or destabilizing) or a
/// componentwise sine mix.
inline PlantFunction random_lipschitz_plant(int n, double L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double target = L * (0.2 + 0.8 * unit(rng));
  if (unit(rng) < 0.5) {
    Mat A(n, 2 * n);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = gauss(rng);
    const double norm = Eigen::JacobiSVD<Mat>(A).singularValues()(0);
    return make_linear_plant(norm > 0.0 ? Mat(A * (target / norm)) : A);
  }
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  return make_sine_mix_plant(target * std::cos(theta), target * std::sin(theta), n);
}

}  // namespace pidcap
