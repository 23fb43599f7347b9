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
#include <complex>
#include <vector>

#include "pidcap/closed_loop.hpp"
#include "pidcap/error.hpp"
#include "pidcap/polynomial.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// Roots closer than this (relative to max(1, |a|, |b|)) count as repeated.
/// Loose enough to catch the O(eps^{1/m}) scatter of an m-fold root.
inline constexpr double kSpectralDistinctTol = 1e-6;

/// Eigenvalues of the third-order PID loop with feedthrough c. For the full
/// loop the characteristic polynomial is l^4 - c l^3 - kd l^2 - kp l - ki;
/// the reduced (ki = 0) loop drops the integral state and gives
/// l^3 - c l^2 - kd l - kp. Either way the eigenvalues sum to c, so at least
/// one has positive real part whenever c > 0.
struct SpectralReport {
  double c = 0.0;
  bool reduced = false;
  std::vector<Complex> eigenvalues;  // sorted by ascending real part
  double real_part_sum = 0.0;
  double max_real_part = 0.0;
  bool distinct = false;
  /// Candidates for repeated roots; independent of c.
  std::vector<Complex> multiple_root_set_R;
};

namespace detail {

inline std::vector<double> characteristic_lower(const PidGains& g, double c, bool reduced) {
  if (reduced) return {-g.kp, -g.kd, -c};
  return {-g.ki, -g.kp, -g.kd, -c};
}

/// w p'(w) - d p(w) eliminates c: w^4 + kd w^2 + 2 kp w + 3 ki for the
/// quartic, w^3 + kd w + 2 kp for the reduced cubic.
inline std::vector<double> repeated_root_lower(const PidGains& g, bool reduced) {
  if (reduced) return {2.0 * g.kp, g.kd, 0.0};
  return {3.0 * g.ki, 2.0 * g.kp, g.kd, 0.0};
}

}  // namespace detail

inline SpectralReport spectral_report(const PidGains& gains, double c, bool reduced = false) {
  SpectralReport r;
  r.c = c;
  r.reduced = reduced;
  r.eigenvalues = poly::monic_roots(detail::characteristic_lower(gains, c, reduced));
  r.multiple_root_set_R = poly::monic_roots(detail::repeated_root_lower(gains, reduced));
  r.max_real_part = -INFINITY;
  for (const auto& z : r.eigenvalues) {
    r.real_part_sum += z.real();
    r.max_real_part = std::max(r.max_real_part, z.real());
  }
  r.distinct = poly::min_relative_gap(r.eigenvalues) > kSpectralDistinctTol;
  return r;
}

inline SpectralReport spectral_report(const ThirdOrderLoop& loop) {
  return spectral_report(loop.gains(), loop.c(), loop.reduced());
}

/// |p_c(w)| / (natural evaluation scale) for each w in R; values above 1e-9
/// certify that no candidate is a root for this c.
inline std::vector<double> repeated_root_residuals(const PidGains& gains, double c, bool reduced = false) {
  const auto lower = detail::characteristic_lower(gains, c, reduced);
  std::vector<double> out;
  for (const auto& w : poly::monic_roots(detail::repeated_root_lower(gains, reduced))) {
    out.push_back(std::abs(poly::eval_monic(lower, w)) / poly::eval_scale(lower, w));
  }
  return out;
}

namespace detail {

inline double select_distinct_c(const PidGains& gains, double L, bool reduced) {
  constexpr int kCandidates = 64;
  for (int k = 1; k <= kCandidates; ++k) {
    const double c = L / k;
    const auto report = spectral_report(gains, c, reduced);
    if (!report.distinct) continue;
    const auto lower = characteristic_lower(gains, c, reduced);
    bool clear = true;
    for (const auto& w : report.multiple_root_set_R) {
      const double scale = poly::eval_scale(lower, w);
      // w = 0 is never a repeated root once the constant term is nonzero,
      // and when it is zero the root spacing test above decides.
      if (std::abs(w) <= 1e-12 * scale) continue;
      if (!(std::abs(poly::eval_monic(lower, w)) > 1e-9 * scale)) {
        clear = false;
        break;
      }
    }
    if (clear) return c;
  }
  throw Error(ErrorCode::SearchExhausted, "no c in (0, L] gives distinct roots");
}

}  // namespace detail

/// Feedthrough c in (0, L] making the quartic's four roots distinct, chosen
/// from L, L/2, L/3, ...: each w in R rules out at most one value of c.
inline double select_c_lemma_a(const PidGains& gains, LipschitzBound L) {
  if (gains.ki == 0.0) throw Error(ErrorCode::ZeroIntegralGain, "the quartic construction needs ki != 0");
  if (!(L.value() > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "L must be positive");
  return detail::select_distinct_c(gains, L.value(), false);
}

/// The ki = 0 counterpart on the reduced cubic l^3 - c l^2 - kd l - kp.
inline double select_c_reduced(const PidGains& gains, LipschitzBound L) {
  if (!(L.value() > 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "L must be positive");
  return detail::select_distinct_c(gains, L.value(), true);
}

/// Sum_j z_j (1, l_j, l_j^2, ...): the state P z for the Vandermonde matrix P.
inline std::vector<Complex> modal_initial_state(const std::vector<Complex>& roots, const std::vector<Complex>& z) {
  const std::size_t d = roots.size();
  std::vector<Complex> y(d, Complex{0.0, 0.0});
  for (std::size_t j = 0; j < d; ++j) {
    Complex power{1.0, 0.0};
    for (std::size_t k = 0; k < d; ++k) {
      y[k] += z[j] * power;
      power *= roots[j];
    }
  }
  return y;
}

/// l3 e^{l3 t} - l2 e^{l2 t}
inline Complex prop3_closed_form(Complex lambda2, Complex lambda3, double t) {
  return lambda3 * std::exp(lambda3 * t) - lambda2 * std::exp(lambda2 * t);
}

/// top^p e^{top t} - second^p e^{second t}; p = 1 gives the error component of
/// the full loop, p = 0 that of the reduced loop.
inline Complex modal_pair_component(Complex second, Complex top, double t, int power) {
  return std::pow(top, power) * std::exp(top * t) - std::pow(second, power) * std::exp(second * t);
}

enum class InitialStateKind { Real, RealPart, ImaginaryPart };

/// Initial condition y(0) = P (0, ..., 0, -1, 1)^T exciting only the two
/// eigenvalues of largest real part.
///
/// When that vector is not real (the two modes form a conjugate pair, or a
/// complex mode pairs with a real one) the real or imaginary part of the
/// complex solution is used instead. Both are real solutions of the same
/// linear system. A real top root forces the real part, since the imaginary
/// part would drop the dominant mode; otherwise the larger part is taken.
/// `kind` records the choice and `closed_form` projects accordingly.
struct Prop3Start {
  std::vector<Complex> roots;  // sorted by ascending real part
  bool reduced = false;
  Vec y0;
  InitialStateKind kind = InitialStateKind::Real;
  double imaginary_residue = 0.0;  // ||Im y(0)|| / ||y(0)|| before any fallback

  Complex top() const { return roots.back(); }
  Complex second() const { return roots[roots.size() - 2]; }
  int error_index() const noexcept { return reduced ? 0 : 1; }
  bool complex_fallback() const noexcept { return kind != InitialStateKind::Real; }

  /// Predicted error component e(t) of the real solution started from y0.
  double closed_form(double t) const {
    const Complex v = modal_pair_component(second(), top(), t, reduced ? 0 : 1);
    return kind == InitialStateKind::ImaginaryPart ? v.imag() : v.real();
  }
};

/// Throws ComplexInitialState instead of falling back when `strict` is set.
inline Prop3Start prop3_initial_condition(const PidGains& gains, double c, bool reduced = false, bool strict = false) {
  const auto report = spectral_report(gains, c, reduced);
  if (!report.distinct) throw Error(ErrorCode::DegenerateTriple, "the characteristic roots are not distinct");

  Prop3Start start;
  start.roots = report.eigenvalues;
  start.reduced = reduced;
  const std::size_t d = start.roots.size();
  std::vector<Complex> z(d, Complex{0.0, 0.0});
  z[d - 2] = -1.0;
  z[d - 1] = 1.0;
  const auto y = modal_initial_state(start.roots, z);

  Vec re(static_cast<Eigen::Index>(d)), im(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < d; ++k) {
    re(static_cast<Eigen::Index>(k)) = y[k].real();
    im(static_cast<Eigen::Index>(k)) = y[k].imag();
  }
  const double total = std::hypot(re.norm(), im.norm());
  start.imaginary_residue = total > 0.0 ? im.norm() / total : 0.0;
  if (im.norm() <= 1e-6 * total) {
    start.y0 = re;
    start.kind = InitialStateKind::Real;
  } else {
    if (strict) throw Error(ErrorCode::ComplexInitialState, "y(0) has a significant imaginary part");
    const bool top_is_real = start.top().imag() == 0.0;
    const bool use_imag = !top_is_real && im.norm() >= re.norm();
    start.y0 = use_imag ? im : re;
    start.kind = use_imag ? InitialStateKind::ImaginaryPart : InitialStateKind::RealPart;
  }
  return start;
}

}  // namespace pidcap
