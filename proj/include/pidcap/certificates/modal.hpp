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

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SVD>

#include "pidcap/closed_loop.hpp"
#include "pidcap/error.hpp"
#include "pidcap/gain_design.hpp"
#include "pidcap/integrator.hpp"
#include "pidcap/plants.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

/// 3n x 3n block companion matrix [0 I 0; 0 0 I; ki I, kp I, kd I].
inline Mat companion_matrix(const PidGains& g, int n) {
  Mat A = Mat::Zero(3 * n, 3 * n);
  for (int i = 0; i < n; ++i) {
    A(i, n + i) = 1.0;
    A(n + i, 2 * n + i) = 1.0;
    A(2 * n + i, i) = g.ki;
    A(2 * n + i, n + i) = g.kp;
    A(2 * n + i, 2 * n + i) = g.kd;
  }
  return A;
}

/// Expands a scalar r x c matrix into the block matrix with blocks s * I_n.
inline Mat kron_identity(const Mat& scalar, int n) {
  Mat out = Mat::Zero(scalar.rows() * n, scalar.cols() * n);
  for (Eigen::Index r = 0; r < scalar.rows(); ++r) {
    for (Eigen::Index c = 0; c < scalar.cols(); ++c) {
      for (int i = 0; i < n; ++i) out(r * n + i, c * n + i) = scalar(r, c);
    }
  }
  return out;
}

/// Diagonalizing change of coordinates Y = P Z for the block companion
/// matrix with distinct eigenvalues (l1, l2, l3):
///
///   P  = [1/l1  1/l2  1/l3^2]      P' = rows 2-3 of P      J = diag(l1, l2, l3)
///        [1     1     1/l3  ]
///        [l1    l2    1     ]
///
/// Every block is a multiple of I_n, so only the 3x3 scalar pattern is
/// stored; the dense_* accessors expand it.
struct ModalTransform {
  EigenTriple lam;
  int dim_n = 1;
  Eigen::Matrix3d P;
  Eigen::Matrix3d P_inverse;
  Eigen::Matrix<double, 2, 3> P_prime;
  Eigen::Vector3d J;

  Mat dense_P() const { return kron_identity(P, dim_n); }
  Mat dense_P_inverse() const { return kron_identity(P_inverse, dim_n); }
  Mat dense_P_prime() const { return kron_identity(P_prime, dim_n); }
  Mat dense_J() const { return kron_identity(Mat(J.asDiagonal()), dim_n); }

  /// Z = P^{-1} Y, applied blockwise.
  Vec to_modal(const Vec& Y) const { return apply(P_inverse, Y); }
  Vec from_modal(const Vec& Z) const { return apply(P, Z); }

  /// Coupling coefficients of g in the modal equations (last column of P^{-1}).
  Eigen::Vector3d coupling() const { return P_inverse.col(2); }

 private:
  Vec apply(const Eigen::Matrix3d& M, const Vec& X) const {
    const int n = dim_n;
    Vec out = Vec::Zero(3 * n);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) out.segment(r * n, n) += M(r, c) * X.segment(c * n, n);
    }
    return out;
  }
};

inline ModalTransform build_modal_transform(const EigenTriple& lam, int n) {
  if (n < 1) throw Error(ErrorCode::BadParams, "dimension n must be positive");
  if (!pairwise_distinct(lam) || lam.lambda1 == 0.0 || lam.lambda2 == 0.0 || lam.lambda3 == 0.0) {
    throw Error(ErrorCode::DegenerateTriple, "modal transform needs distinct nonzero eigenvalues");
  }
  const auto [l1, l2, l3] = lam;
  ModalTransform m;
  m.lam = lam;
  m.dim_n = n;
  m.P << 1.0 / l1, 1.0 / l2, 1.0 / (l3 * l3),  //
      1.0, 1.0, 1.0 / l3,                       //
      l1, l2, 1.0;
  m.P_prime = m.P.bottomRows<2>();
  m.J << l1, l2, l3;

  // P = V D with V the Vandermonde matrix in (l1, l2, l3) and
  // D = diag(1/l1, 1/l2, 1/l3^2). Row j of V^{-1} holds the coefficients of
  // the Lagrange basis polynomial (x - a)(x - b) / ((lj - a)(lj - b)).
  const std::array<double, 3> l{l1, l2, l3};
  const std::array<double, 3> d_inv{l1, l2, l3 * l3};
  for (int j = 0; j < 3; ++j) {
    const double a = l[static_cast<std::size_t>((j + 1) % 3)];
    const double b = l[static_cast<std::size_t>((j + 2) % 3)];
    const double lj = l[static_cast<std::size_t>(j)];
    const double den = (lj - a) * (lj - b);
    const double s = d_inv[static_cast<std::size_t>(j)] / den;
    m.P_inverse.row(j) << s * a * b, -s * (a + b), s;
  }

  const double residual = (m.P * m.P_inverse - Eigen::Matrix3d::Identity()).norm();
  const double scale = std::max(1.0, m.P.norm() * m.P_inverse.norm());
  if (!(residual <= 1e-9 * scale)) {
    throw Error(ErrorCode::DegenerateTriple, "modal transform is numerically singular");
  }
  return m;
}

/// V(Z) = 1/2 (l2 l3 |z0|^2 + l1 l3 |z1|^2 + l1 l2 |z2|^2)
inline double lyapunov_value(const Vec& Z, const EigenTriple& lam) {
  const auto n = Z.size() / 3;
  const auto [l1, l2, l3] = lam;
  return 0.5 * (l2 * l3 * Z.segment(0, n).squaredNorm() + l1 * l3 * Z.segment(n, n).squaredNorm() +
                l1 * l2 * Z.segment(2 * n, n).squaredNorm());
}

/// Error coordinates with the integral shifted so that the equilibrium is
/// the origin: (y0 + f(y*, 0)/ki, x1 - y*, x2).
inline Vec proof_coordinates(const SecondOrderLoop& loop, const Vec& physical) {
  if (loop.gains().ki == 0.0) throw Error(ErrorCode::ShiftUndefined, "the integral shift needs ki != 0");
  const int n = loop.dim_n();
  Vec Y = error_coordinates(physical, loop.setpoint());
  Y.segment(0, n) += loop.plant()(loop.setpoint(), Vec::Zero(n)) / loop.gains().ki;
  return Y;
}

/// Analytic dV/dt along the modal equations
///   z_j' = l_j z_j + c_j g(P' Z),
/// i.e. l1 l2 l3 |Z|^2 + g . (l2 l3 c1 z0 + l1 l3 c2 z1 + l1 l2 c3 z2).
inline double lyapunov_derivative_along(const SecondOrderLoop& loop, const ModalTransform& tf, const Vec& physical) {
  const int n = loop.dim_n();
  const Vec Y = proof_coordinates(loop, physical);
  const Vec Z = tf.to_modal(Y);
  const Vec YZ = tf.from_modal(Z);
  const PlantFunction g = shift_nonlinearity(loop.plant(), loop.setpoint());
  const Vec gv = g(YZ.segment(n, n), YZ.segment(2 * n, n));

  const auto [l1, l2, l3] = tf.lam;
  const Eigen::Vector3d c = tf.coupling();
  const Vec weighted = l2 * l3 * c(0) * Z.segment(0, n) + l1 * l3 * c(1) * Z.segment(n, n) +
                       l1 * l2 * c(2) * Z.segment(2 * n, n);
  return l1 * l2 * l3 * Z.squaredNorm() + gv.dot(weighted);
}

/// Same quantity by the chain rule grad V(Z) . P^{-1} Y', with Y' taken from
/// the physical vector field. Independent of the modal equations.
inline double lyapunov_derivative_chain(const SecondOrderLoop& loop, const ModalTransform& tf, const Vec& physical) {
  const int n = loop.dim_n();
  const Vec Z = tf.to_modal(proof_coordinates(loop, physical));
  const Vec Zdot = tf.to_modal(loop.field(physical));
  const auto [l1, l2, l3] = tf.lam;
  return l2 * l3 * Z.segment(0, n).dot(Zdot.segment(0, n)) + l1 * l3 * Z.segment(n, n).dot(Zdot.segment(n, n)) +
         l1 * l2 * Z.segment(2 * n, n).dot(Zdot.segment(2 * n, n));
}

/// l1 l2 l3 (1 - L phi h): the decay coefficient bounding dV/dt by
/// margin * |Z|^2. Negative iff the certificate is conclusive.
inline double vdot_margin(const EigenTriple& lam, LipschitzBound L) {
  return lam.lambda1 * lam.lambda2 * lam.lambda3 * (1.0 - L.value() * phi(lam) * h(lam));
}

struct LyapunovCertificate {
  EigenTriple lam;
  LipschitzBound L;
  double margin = 0.0;

  bool conclusive() const noexcept { return margin < 0.0; }
};

inline LyapunovCertificate make_lyapunov_certificate(const EigenTriple& lam, LipschitzBound L) {
  return {lam, L, vdot_margin(lam, L)};
}

/// Least-squares slope of ln ||state - equilibrium|| over the second half of
/// the recorded time span, ignoring samples at the rounding floor.
inline double exponential_rate_fit(const Trajectory& traj, const Vec& equilibrium) {
  const double t_half = 0.5 * traj.final_time();
  const double floor_norm = 1e2 * std::numeric_limits<double>::epsilon();
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    if (t < t_half) continue;
    const double r = (traj.states[i] - equilibrium).norm();
    if (!(r > floor_norm) || !std::isfinite(r)) continue;
    const double ly = std::log(r);
    n += 1;
    st += t;
    sy += ly;
    stt += t * t;
    sty += t * ly;
  }
  const double denom = n * stt - st * st;
  if (n < 10 || !(denom > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "need at least 10 usable samples for a rate fit");
  }
  return (n * sty - st * sy) / denom;
}

/// Spectral norm of P' computed numerically from the dense block matrix.
inline double p_prime_norm(const ModalTransform& tf) {
  return Eigen::JacobiSVD<Mat>(tf.dense_P_prime()).singularValues()(0);
}

}  // namespace pidcap
