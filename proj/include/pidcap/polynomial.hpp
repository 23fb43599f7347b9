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
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pidcap/types.hpp"

namespace pidcap::poly {

/// Evaluates the monic polynomial z^d + c[d-1] z^{d-1} + ... + c[0].
inline Complex eval_monic(std::span<const double> lower, Complex z) {
  Complex acc{1.0, 0.0};
  for (auto it = lower.rbegin(); it != lower.rend(); ++it) acc = acc * z + *it;
  return acc;
}

inline Complex eval_monic_derivative(std::span<const double> lower, Complex z) {
  const auto d = static_cast<double>(lower.size());
  Complex acc{d, 0.0};
  for (std::size_t k = lower.size() - 1; k >= 1; --k) acc = acc * z + static_cast<double>(k) * lower[k];
  return acc;
}

/// Sum of |term| magnitudes at z; the natural rounding scale when deciding
/// whether a residual is zero.
inline double eval_scale(std::span<const double> lower, Complex z) {
  const double r = std::abs(z);
  double acc = 1.0;
  for (auto it = lower.rbegin(); it != lower.rend(); ++it) acc = acc * r + std::abs(*it);
  return acc;
}

/// Sort key shared by every root list in the library: ascending real part,
/// ties broken by ascending imaginary part.
inline bool root_less(const Complex& a, const Complex& b) noexcept {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Roots of a real monic polynomial, with multiplicity.
///
/// Eigenvalues of the Frobenius companion matrix give the first estimate;
/// each is then polished with at most `polish_iterations` Newton steps, a
/// step being kept only when it lowers the residual. Roots are returned
/// sorted by root_less.
inline std::vector<Complex> monic_roots(std::span<const double> lower, int polish_iterations = 5) {
  const auto d = static_cast<Eigen::Index>(lower.size());
  std::vector<Complex> roots;
  if (d == 0) return roots;

  Mat companion = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i + 1 < d; ++i) companion(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) companion(d - 1, j) = -lower[static_cast<std::size_t>(j)];

  Eigen::EigenSolver<Mat> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  roots.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) roots.push_back(ev(i));

  for (auto& z : roots) {
    Complex value = eval_monic(lower, z);
    for (int it = 0; it < polish_iterations && std::abs(value) > 0.0; ++it) {
      const Complex slope = eval_monic_derivative(lower, z);
      if (std::abs(slope) == 0.0) break;
      Complex candidate = z - value / slope;
      // real roots stay on the real axis
      if (z.imag() == 0.0) candidate.imag(0.0);
      const Complex next_value = eval_monic(lower, candidate);
      if (!(std::abs(next_value) < std::abs(value))) break;
      z = candidate;
      value = next_value;
    }
  }
  std::sort(roots.begin(), roots.end(), root_less);
  return roots;
}

/// Smallest pairwise distance relative to max(1, |a|, |b|).
inline double min_relative_gap(std::span<const Complex> roots) {
  double best = INFINITY;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      const double scale = std::max({1.0, std::abs(roots[i]), std::abs(roots[j])});
      best = std::min(best, std::abs(roots[i] - roots[j]) / scale);
    }
  }
  return best;
}

}  // namespace pidcap::poly
