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
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pidcap/error.hpp"
#include "pidcap/polynomial.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// Two eigenvalues coincide when |a - b| <= kDistinctTol * max(1, |a|, |b|).
inline constexpr double kDistinctTol = 1e-9;
/// A cubic root is treated as real when |Im| <= kRealRootTol * max(1, |root|).
inline constexpr double kRealRootTol = 1e-9;

enum class RegionFailure { NotNegative, NotDistinct, ProductNotBelowOne, NotReal };

constexpr std::string_view to_string(RegionFailure f) noexcept {
  switch (f) {
    case RegionFailure::NotNegative: return "NotNegative";
    case RegionFailure::NotDistinct: return "NotDistinct";
    case RegionFailure::ProductNotBelowOne: return "ProductNotBelowOne";
    case RegionFailure::NotReal: return "NotReal";
  }
  return "Unknown";
}

/// Outcome of a region-membership test. Failures are data, never exceptions,
/// so grid sweeps run to completion.
struct RegionReport {
  EigenTriple triple;           // the ordering that was tested
  std::vector<Complex> roots;   // closed-loop cubic roots (gain-space test only)
  double phi_value = INFINITY;
  double h_value = INFINITY;
  double product_L_phi_h = INFINITY;
  bool member = false;
  std::vector<RegionFailure> failure_reasons;

  bool has(RegionFailure f) const {
    return std::find(failure_reasons.begin(), failure_reasons.end(), f) != failure_reasons.end();
  }
};

inline bool coincident(double a, double b) noexcept {
  return std::abs(a - b) <= kDistinctTol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool pairwise_distinct(const EigenTriple& lam) noexcept {
  return !coincident(lam.lambda1, lam.lambda2) && !coincident(lam.lambda1, lam.lambda3) &&
         !coincident(lam.lambda2, lam.lambda3);
}

inline double phi(const EigenTriple& lam) {
  if (!pairwise_distinct(lam)) throw Error(ErrorCode::DegenerateTriple, "phi needs pairwise distinct eigenvalues");
  const auto [l1, l2, l3] = lam;
  const double d31 = l3 - l1;
  const double d21 = l2 - l1;
  const double d32 = l3 - l2;
  const double num = d32 * d32 + d31 * d31 + l3 * l3 * d21 * d21;
  const double den = d31 * d31 * d21 * d21 * d32 * d32;
  return std::sqrt(num / den);
}

inline double h(const EigenTriple& lam) {
  if (lam.lambda3 == 0.0) throw Error(ErrorCode::DegenerateTriple, "h needs lambda3 != 0");
  return std::sqrt(3.0 + lam.lambda1 * lam.lambda1 + lam.lambda2 * lam.lambda2 +
                   1.0 / (lam.lambda3 * lam.lambda3));
}

/// Sufficient-region test in eigenvalue space for the given ordering.
inline RegionReport in_omega_lambda(const EigenTriple& lam, LipschitzBound L) {
  RegionReport report;
  report.triple = lam;
  if (!(lam.lambda1 < 0.0 && lam.lambda2 < 0.0 && lam.lambda3 < 0.0)) {
    report.failure_reasons.push_back(RegionFailure::NotNegative);
  }
  const bool distinct = pairwise_distinct(lam);
  if (!distinct) report.failure_reasons.push_back(RegionFailure::NotDistinct);

  if (distinct) report.phi_value = phi(lam);
  if (lam.lambda3 != 0.0) report.h_value = h(lam);
  report.product_L_phi_h = L.value() == 0.0 ? 0.0 : L.value() * report.phi_value * report.h_value;

  if (distinct && lam.lambda3 != 0.0 && !(report.product_L_phi_h < 1.0)) {
    report.failure_reasons.push_back(RegionFailure::ProductNotBelowOne);
  }
  report.member = report.failure_reasons.empty();
  return report;
}

/// Vieta map: gains whose closed-loop cubic l^3 - kd l^2 - kp l - ki has roots lam.
inline PidGains lambda_to_gains(const EigenTriple& lam) noexcept {
  const auto [l1, l2, l3] = lam;
  return PidGains{.kp = -(l1 * l2 + l1 * l3 + l2 * l3), .ki = l1 * l2 * l3, .kd = l1 + l2 + l3};
}

/// Lower coefficients of the monic closed-loop cubic.
inline std::array<double, 3> closed_loop_cubic(const PidGains& g) noexcept {
  return {-g.ki, -g.kp, -g.kd};
}

inline std::array<Complex, 3> gains_to_lambda(const PidGains& g) {
  const auto coeffs = closed_loop_cubic(g);
  const auto roots = poly::monic_roots(coeffs);
  return {roots[0], roots[1], roots[2]};
}

/// Gain-space test. Membership in the gain region means that *some* ordering
/// of the closed-loop roots lies in the eigenvalue region, so every ordering
/// is tried and the one with the smallest product is reported.
inline RegionReport in_omega_k(const PidGains& gains, LipschitzBound L) {
  const auto roots = gains_to_lambda(gains);
  bool all_real = true;
  std::array<double, 3> re{};
  for (std::size_t i = 0; i < 3; ++i) {
    re[i] = roots[i].real();
    if (std::abs(roots[i].imag()) > kRealRootTol * std::max(1.0, std::abs(roots[i]))) all_real = false;
  }

  std::array<int, 3> idx{0, 1, 2};
  RegionReport best;
  bool first = true;
  do {
    const EigenTriple lam{re[static_cast<std::size_t>(idx[0])], re[static_cast<std::size_t>(idx[1])],
                          re[static_cast<std::size_t>(idx[2])]};
    auto candidate = in_omega_lambda(lam, L);
    if (first || candidate.product_L_phi_h < best.product_L_phi_h) {
      best = std::move(candidate);
      first = false;
    }
  } while (std::next_permutation(idx.begin(), idx.end()));

  best.roots.assign(roots.begin(), roots.end());
  if (!all_real) {
    best.failure_reasons.insert(best.failure_reasons.begin(), RegionFailure::NotReal);
    best.member = false;
  }
  return best;
}

inline EigenTriple corollary_triple(double epsilon, double a) noexcept {
  return {-epsilon, -(1.0 + epsilon), -a};
}

/// Closed-form gains on the two-parameter family
///   kp = -(e(1+e) + (1+2e)a), ki = -e(1+e)a, kd = -(a+1+2e)
/// with 0 < e < 1/4 and a > max(5L, 5). Computed through the Vieta map of
/// (-e, -(1+e), -a) so the two routes agree bit for bit.
inline PidGains corollary_gains(double epsilon, double a, LipschitzBound L) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) {
    throw Error(ErrorCode::ParameterOutOfRange, "epsilon must lie in (0, 1/4), got " + std::to_string(epsilon));
  }
  const double a_min = std::max(5.0 * L.value(), 5.0);
  if (!(a > a_min) || !std::isfinite(a)) {
    throw Error(ErrorCode::ParameterOutOfRange,
                "a must exceed max(5L, 5) = " + std::to_string(a_min) + ", got " + std::to_string(a));
  }
  return lambda_to_gains(corollary_triple(epsilon, a));
}

/// Draws distinct negative (lambda1, lambda2) uniformly from [-2, -0.01] and
/// pushes lambda3 from -10 towards -infinity by doubling until the product
/// test passes. Deterministic for a fixed seed.
inline EigenTriple sample_omega_lambda(LipschitzBound L, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-2.0, -0.01);
  double l1 = draw(rng);
  double l2 = draw(rng);
  while (coincident(l1, l2)) l2 = draw(rng);

  double l3 = -10.0;
  constexpr int kMaxDoublings = 1000;
  for (int i = 0; i < kMaxDoublings && std::isfinite(l3); ++i, l3 *= 2.0) {
    const EigenTriple lam{l1, l2, l3};
    if (in_omega_lambda(lam, L).member) return lam;
  }
  throw Error(ErrorCode::SearchExhausted, "no member found for L = " + std::to_string(L.value()));
}

/// Determinant of the Jacobian of the Vieta map; nonzero iff the entries are distinct.
inline double vieta_jacobian_det(const EigenTriple& lam) noexcept {
  const auto [l1, l2, l3] = lam;
  return (l1 - l2) * (l1 - l3) * (l3 - l2);
}

}  // namespace pidcap
