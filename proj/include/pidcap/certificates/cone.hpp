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

#include <algorithm>
#include <cmath>
#include <string_view>

#include <Eigen/Dense>

#include "pidcap/closed_loop.hpp"
#include "pidcap/error.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// C_L = { y : y2 - 1 >= y1 >= y0 + L >= L }, a closed cone with vertex
/// (0, L, L + 1). L_cone is the cone parameter, not a Lipschitz constant.
struct ConeCL {
  double L_cone = 1.0;

  Eigen::Vector3d vertex() const { return {0.0, L_cone, L_cone + 1.0}; }
};

enum class Facet { S1, S2, S3 };

constexpr std::string_view to_string(Facet f) noexcept {
  switch (f) {
    case Facet::S1: return "S1";
    case Facet::S2: return "S2";
    case Facet::S3: return "S3";
  }
  return "?";
}

/// Inward normals v1 = (1,0,0), v2 = (-1,1,0), v3 = (0,-1,1).
inline Eigen::Vector3d facet_normal(Facet f) {
  switch (f) {
    case Facet::S1: return {1.0, 0.0, 0.0};
    case Facet::S2: return {-1.0, 1.0, 0.0};
    case Facet::S3: return {0.0, -1.0, 1.0};
  }
  return Eigen::Vector3d::Zero();
}

/// Exact comparisons, no tolerance.
inline bool cone_contains(const ConeCL& cone, const Eigen::Vector3d& y) noexcept {
  const double L = cone.L_cone;
  return y(2) - 1.0 >= y(1) && y(1) >= y(0) + L && y(0) + L >= L;
}

namespace detail {

inline bool on_facet(const ConeCL& cone, const Eigen::Vector3d& y, Facet f) {
  const double L = cone.L_cone;
  const double tol = 1e-12 * std::max({1.0, L, y.cwiseAbs().maxCoeff()});
  const double g1 = y(2) - 1.0 - y(1);  // S3 when zero
  const double g2 = y(1) - y(0) - L;    // S2 when zero
  const double g3 = y(0);               // S1 when zero
  if (g1 < -tol || g2 < -tol || g3 < -tol) return false;
  switch (f) {
    case Facet::S1: return std::abs(g3) <= tol;
    case Facet::S2: return std::abs(g2) <= tol;
    case Facet::S3: return std::abs(g1) <= tol;
  }
  return false;
}

}  // namespace detail

/// Inner product of the facet's inward normal with the superlinear vector
/// field at a boundary point. Positive everywhere on the boundary means the
/// cone is forward invariant.
inline double cone_facet_flux(const SuperlinearLoop& loop, const ConeCL& cone, const Eigen::Vector3d& y, Facet f) {
  if (!detail::on_facet(cone, y, f)) {
    throw Error(ErrorCode::NotOnFacet, "point is not on facet " + std::string(to_string(f)));
  }
  const Vec ydot = loop.field(Vec(y));
  return facet_normal(f).dot(Eigen::Vector3d(ydot));
}

/// Minimum margins of the two sandwich inequalities over the cone,
///   lower:  F(y) - (y2 + y2^{1+e}/2)        >= 0
///   upper:  (3 y2^2)^{(1+e)/2} - F(y)       >= 0
/// where F is the last component of the superlinear vector field.
struct ConeInequalityMargins {
  double lower = INFINITY;
  double upper = INFINITY;
  bool hold() const noexcept { return lower >= 0.0 && upper >= 0.0; }
};

inline ConeInequalityMargins cone_inequality_margins_at(const SuperlinearLoop& loop, const Eigen::Vector3d& y) {
  const double e = loop.epsilon();
  const double F = loop.field(Vec(y))(2);
  const double y2 = y(2);
  ConeInequalityMargins m;
  m.lower = F - (y2 + 0.5 * std::pow(y2, 1.0 + e));
  m.upper = std::pow(3.0 * y2 * y2, 0.5 * (1.0 + e)) - F;
  return m;
}

namespace detail {

/// Radical inverse in the given base (Halton sequence coordinate).
inline double radical_inverse(unsigned long index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace detail

/// Evaluates both margins on `samples` Halton points of C_L plus the vertex.
/// Points are y0 = s0, y1 = y0 + L + s1, y2 = y1 + 1 + s2 with each offset
/// spread logarithmically over [0, 1e4 (L + 1)].
inline ConeInequalityMargins sample_cone_margins(const SuperlinearLoop& loop, double L_cone, int samples) {
  ConeInequalityMargins worst;
  const auto fold = [&](const Eigen::Vector3d& y) {
    const auto m = cone_inequality_margins_at(loop, y);
    worst.lower = std::min(worst.lower, m.lower);
    worst.upper = std::min(worst.upper, m.upper);
  };
  const double span = L_cone + 1.0;
  const auto offset = [span](double u) { return span * std::expm1(u * std::log(1e4 + 1.0)); };
  fold(ConeCL{L_cone}.vertex());
  for (int i = 1; i <= samples; ++i) {
    const auto k = static_cast<unsigned long>(i);
    // every fourth point sits on an edge through the vertex
    const bool edge = i % 4 == 0;
    const double s0 = edge ? 0.0 : offset(detail::radical_inverse(k, 2));
    const double s1 = offset(detail::radical_inverse(k, 3));
    const double s2 = edge ? 0.0 : offset(detail::radical_inverse(k, 5));
    const double y0 = s0;
    const double y1 = y0 + L_cone + s1;
    const double y2 = y1 + 1.0 + s2;
    fold({y0, y1, y2});
  }
  return worst;
}

/// Analytic seed max{(2(|ki| + |kp| + |kd| + 1))^{1/e} - 1, 2|y*|, 1}.
inline double cone_parameter_seed(const PidGains& g, double epsilon, double setpoint) {
  const double sum = std::abs(g.ki) + std::abs(g.kp) + std::abs(g.kd);
  return std::max({std::pow(2.0 * (sum + 1.0), 1.0 / epsilon) - 1.0, 2.0 * std::abs(setpoint), 1.0});
}

inline constexpr int kConeSamples = 10000;

/// Cone parameter for which both sandwich inequalities hold on C_L: the
/// analytic seed, doubled until the sampled check passes with margin >= 0.
inline double pick_cone_parameter(const PidGains& gains, double epsilon, double setpoint) {
  const SuperlinearLoop loop(epsilon, gains, setpoint);
  double L = cone_parameter_seed(gains, epsilon, setpoint);
  for (int i = 0; i < 200 && std::isfinite(L); ++i, L *= 2.0) {
    if (sample_cone_margins(loop, L, kConeSamples).hold()) return L;
  }
  throw Error(ErrorCode::SearchExhausted, "no verified cone parameter found");
}

/// Upper bound 2 / (e (L+1)^e) on the escape time from the cone vertex.
inline double escape_time_bound(double epsilon, double L_cone) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "escape bound needs eps > 0");
  return 2.0 / (epsilon * std::pow(L_cone + 1.0, epsilon));
}

/// Comparison envelope y2(t) >= ((L+1)^{-e} - t e / 2)^{-1/e}, written as
/// (L+1) (1 - t e (L+1)^e / 2)^{-1/e} so that t = 0 returns L+1 exactly.
inline double comparison_lower_bound(double epsilon, double L_cone, double t) {
  const double bound = escape_time_bound(epsilon, L_cone);
  if (!(t < bound)) throw Error(ErrorCode::BeyondBound, "t is past the escape-time bound");
  const double s = 0.5 * t * epsilon * std::pow(L_cone + 1.0, epsilon);
  return (L_cone + 1.0) * std::pow(1.0 - s, -1.0 / epsilon);
}

/// e(t) >= L + (L+1) t while the trajectory stays in the cone.
inline double linear_error_lower_bound(double L_cone, double t) noexcept { return L_cone + (L_cone + 1.0) * t; }

/// dy1/dy2 >= c_e / y2^e with c_e = 3^{-(1+e)/2}, forced by the upper
/// sandwich inequality.
inline double divergence_slope_constant(double epsilon) { return std::pow(3.0, -0.5 * (1.0 + epsilon)); }

/// Lower envelope for e as a function of y2 along the escaping trajectory:
/// L + c_e * int_{L+1}^{y2} s^{-e} ds. Unbounded in y2 exactly when e <= 1.
inline double divergence_envelope(double epsilon, double L_cone, double y2) {
  const double c = divergence_slope_constant(epsilon);
  const double a = L_cone + 1.0;
  if (y2 <= a) return L_cone;
  const double integral = epsilon == 1.0 ? std::log(y2 / a)
                                         : (std::pow(y2, 1.0 - epsilon) - std::pow(a, 1.0 - epsilon)) / (1.0 - epsilon);
  return L_cone + c * integral;
}

}  // namespace pidcap
