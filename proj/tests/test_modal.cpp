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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pidcap/certificates/modal.hpp"

namespace {

using namespace pidcap;

const EigenTriple k123{-1.0, -2.0, -3.0};
const EigenTriple k12_100{-1.0, -2.0, -100.0};

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

EigenTriple random_member(std::mt19937_64& rng, double L) {
  return sample_omega_lambda(LipschitzBound(L), rng());
}

TEST(ModalTransform, Oracles) {
  const auto tf = build_modal_transform(k123, 1);
  EXPECT_DOUBLE_EQ(tf.P(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(tf.P(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(tf.P(0, 2), 1.0 / 9.0);
  EXPECT_NEAR(tf.P_inverse(0, 2), -0.5, 1e-15);
  EXPECT_NEAR((tf.P * tf.P_inverse - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-14);

  const auto tf2 = build_modal_transform(k123, 2);
  const Mat P = tf2.dense_P();
  EXPECT_EQ(P.rows(), 6);
  EXPECT_LE((P * tf2.dense_P_inverse() - Mat::Identity(6, 6)).norm(), 1e-13);
}

TEST(ModalTransform, LastColumnOfInverse) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const auto lam = random_member(rng, 1.0);
    const auto tf = build_modal_transform(lam, 1);
    const auto [l1, l2, l3] = lam;
    EXPECT_NEAR(tf.P_inverse(0, 2), l1 / ((l3 - l1) * (l2 - l1)), 1e-12 * std::abs(tf.P_inverse(0, 2)) + 1e-15);
  }
}

TEST(ModalTransform, Degenerate) {
  EXPECT_THROW(build_modal_transform({-1.0, -1.0, -3.0}, 1), Error);
  EXPECT_THROW(build_modal_transform({-1.0, -2.0, 0.0}, 1), Error);
}

TEST(Lyapunov, Values) {
  EXPECT_EQ(lyapunov_value(Vec::Zero(3), k123), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(vec({1, 0, 0}), k123), 3.0);
  EXPECT_DOUBLE_EQ(lyapunov_value(vec({1, 1, 1}), k123), 5.5);
}

TEST(Lyapunov, Margins) {
  EXPECT_NEAR(vdot_margin(k12_100, LipschitzBound(1.0)), -190.00168016886869, 1e-11);
  EXPECT_DOUBLE_EQ(vdot_margin(k123, LipschitzBound(0.0)), -6.0);
  EXPECT_NEAR(vdot_margin(k123, LipschitzBound(1.0)), 25.96873472629156, 1e-11);
  EXPECT_FALSE(make_lyapunov_certificate(k123, LipschitzBound(1.0)).conclusive());
  EXPECT_TRUE(make_lyapunov_certificate(k12_100, LipschitzBound(1.0)).conclusive());
}

TEST(Lyapunov, DerivativeAtEquilibriumIsZero) {
  Vec sp(1);
  sp << 2.0;
  const SecondOrderLoop loop(make_sine_mix_plant(0.6, 0.8), lambda_to_gains(k12_100), sp);
  const auto tf = build_modal_transform(k12_100, 1);
  EXPECT_NEAR(lyapunov_derivative_along(loop, tf, loop.equilibrium()), 0.0, 1e-12);
}

TEST(Lyapunov, ZeroPlantIsPureDecay) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const auto tf = build_modal_transform(k12_100, 2);
  Vec sp(2);
  sp << 1.0, -1.0;
  const SecondOrderLoop loop(catalog_lookup("zero", {{"n", 2}}), lambda_to_gains(k12_100), sp);
  for (int k = 0; k < 50; ++k) {
    Vec s(6);
    for (int i = 0; i < 6; ++i) s(i) = u(rng);
    const Vec Z = tf.to_modal(proof_coordinates(loop, s));
    const double expected = -200.0 * Z.squaredNorm();
    EXPECT_NEAR(lyapunov_derivative_along(loop, tf, s), expected, 1e-10 * std::abs(expected));
  }
}

TEST(Lyapunov, BoundHoldsForSineMix) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const auto plant = catalog_lookup("sine_mix", {{"alpha", 0.6}, {"beta", 0.8}});
  const auto tf = build_modal_transform(k12_100, 1);
  const double margin = vdot_margin(k12_100, LipschitzBound(1.0));
  Vec sp(1);
  sp << 5.0;
  const SecondOrderLoop loop(plant, lambda_to_gains(k12_100), sp);
  for (int k = 0; k < 500; ++k) {
    Vec s(3);
    s << u(rng), u(rng), u(rng);
    const double z2 = tf.to_modal(proof_coordinates(loop, s)).squaredNorm();
    EXPECT_LE(lyapunov_derivative_along(loop, tf, s), margin * z2 * (1.0 - 1e-6));
  }
}

TEST(Lyapunov, ShiftNeedsIntegralGain) {
  Vec sp(1);
  sp << 1.0;
  const SecondOrderLoop loop(catalog_lookup("zero"), {-1.0, 0.0, -2.0}, sp);
  const auto tf = build_modal_transform(k123, 1);
  try {
    lyapunov_derivative_along(loop, tf, Vec::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShiftUndefined);
  }
}

TEST(RateFit, Oracles) {
  IntegratorConfig cfg;
  cfg.t_max = 40.0;
  cfg.max_step = 0.5;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-16;
  cfg.detect_convergence = false;
  Vec one(1);
  one << 1.0;
  const auto decay = integrate([](const Vec& y) -> Vec { return -y; }, one, cfg);
  EXPECT_NEAR(exponential_rate_fit(decay, Vec::Zero(1)), -1.0, 0.02);

  Vec sp(1);
  sp << 3.0;
  const SecondOrderLoop loop(catalog_lookup("zero"), lambda_to_gains(k12_100), sp);
  cfg.t_max = 20.0;
  Vec x1(1), x2(1);
  x1 << -4.0;
  x2 << 2.0;
  const auto traj =
      integrate([&loop](const Vec& y) { return loop.field(y); }, initial_state_from_physical(x1, x2, sp), cfg);
  EXPECT_NEAR(exponential_rate_fit(traj, loop.equilibrium()), -1.0, 0.05);

  cfg.t_max = 5.0;
  const auto flat = integrate([](const Vec& y) -> Vec { return Vec::Zero(y.size()); }, Vec::Zero(1), cfg);
  try {
    exponential_rate_fit(flat, Vec::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

// ---------------------------------------------------------------------------
// Properties

TEST(ModalProperty, ReconstructsCompanionMatrix) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const auto lam = random_member(rng, 0.1 + 3.0 * (k % 5));
    for (int n : {1, 2, 3}) {
      const auto tf = build_modal_transform(lam, n);
      const Mat A = companion_matrix(lambda_to_gains(lam), n);
      const Mat R = tf.dense_P() * tf.dense_J() * tf.dense_P_inverse();
      EXPECT_LE((R - A).norm(), 1e-9 * A.norm());
    }
  }
}

TEST(ModalProperty, PPrimeNormBelowH) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30.0, -0.01);
  for (int k = 0; k < 300; ++k) {
    const EigenTriple lam{u(rng), u(rng), u(rng)};
    if (!pairwise_distinct(lam)) continue;
    const auto tf = build_modal_transform(lam, 1 + k % 3);
    EXPECT_LE(p_prime_norm(tf), h(lam) * (1.0 + 1e-12));
  }
}

TEST(ModalProperty, DerivativeRoutesAgree) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + k % 2;
    const auto lam = random_member(rng, 1.0);
    auto plant = random_lipschitz_plant(n, 1.0, rng);
    Vec sp(n), s(3 * n);
    for (int i = 0; i < n; ++i) sp(i) = u(rng);
    for (int i = 0; i < 3 * n; ++i) s(i) = u(rng);
    const SecondOrderLoop loop(plant, lambda_to_gains(lam), sp);
    const auto tf = build_modal_transform(lam, n);
    const double a = lyapunov_derivative_along(loop, tf, s);
    const double c = lyapunov_derivative_chain(loop, tf, s);
    const double scale = std::abs(lam.lambda1 * lam.lambda2 * lam.lambda3) *
                         tf.to_modal(proof_coordinates(loop, s)).squaredNorm();
    EXPECT_LE(std::abs(a - c), 1e-9 * std::max(1.0, scale));
  }
}

TEST(ModalProperty, DerivativeMatchesFiniteDifferenceAlongTrajectory) {
  const EigenTriple lam{-0.1, -1.1, -10.0};
  Vec sp(1);
  sp << 5.0;
  const SecondOrderLoop loop(catalog_lookup("sine_mix", {{"alpha", 0.6}, {"beta", 0.8}}), lambda_to_gains(lam), sp);
  const auto tf = build_modal_transform(lam, 1);
  IntegratorConfig cfg;
  cfg.method = Method::Rk4Fixed;
  // Central differences are O(step^2); 1e-4 keeps them near 1e-7 relative.
  cfg.step = 1e-4;
  cfg.t_max = 2.0;
  cfg.detect_convergence = false;
  Vec x1(1), x2(1);
  x1 << -20.0;
  x2 << 15.0;
  const auto traj =
      integrate([&loop](const Vec& y) { return loop.field(y); }, initial_state_from_physical(x1, x2, sp), cfg);
  const auto V = [&](const Vec& s) { return lyapunov_value(tf.to_modal(proof_coordinates(loop, s)), lam); };
  for (std::size_t k = 1; k + 1 < traj.times.size(); k += 500) {
    const double fd = (V(traj.states[k + 1]) - V(traj.states[k - 1])) / (traj.times[k + 1] - traj.times[k - 1]);
    const double an = lyapunov_derivative_along(loop, tf, traj.states[k]);
    EXPECT_LE(std::abs(fd - an), std::max(1e-6 * std::abs(an), 1e-9)) << "t=" << traj.times[k];
  }
}

TEST(ModalProperty, LyapunovDecreasesAlongCatalogPlants) {
  const std::vector<std::pair<std::string, PlantParams>> plants{
      {"zero", {}}, {"sine_mix", {{"alpha", 0.6}, {"beta", 0.8}}}, {"pendulum", {{"g", 1.0}, {"c", 0.5}}},
      {"damped_spring", {{"k", 0.6}, {"c", 0.8}}}, {"linear", {{"a1_1", 0.8}, {"a1_2", 0.6}}}};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (const auto& [name, params] : plants) {
    const auto plant = catalog_lookup(name, params);
    const LipschitzBound L(*plant.declared_L);
    const auto lam = corollary_triple(0.1, 1.02 * std::max(5.0 * L.value(), 5.0));
    const auto tf = build_modal_transform(lam, 1);
    const double margin = vdot_margin(lam, L);
    for (int k = 0; k < 20; ++k) {
      Vec sp(1), x1(1), x2(1);
      sp << u(rng) / 5.0;
      x1 << u(rng);
      x2 << u(rng);
      const SecondOrderLoop loop(plant, lambda_to_gains(lam), sp);
      IntegratorConfig cfg;
      cfg.t_max = 60.0;
      cfg.equilibrium = loop.equilibrium();
      const auto traj = integrate([&loop](const Vec& y) { return loop.field(y); },
                                  initial_state_from_physical(x1, x2, sp), cfg);
      double prev = INFINITY, v0 = NAN;
      for (const auto& s : traj.states) {
        const Vec Z = tf.to_modal(proof_coordinates(loop, s));
        const double v = lyapunov_value(Z, lam);
        if (std::isnan(v0)) v0 = v;
        EXPECT_LE(v, prev + 1e-6 * v0) << name;
        EXPECT_LE(lyapunov_derivative_along(loop, tf, s), margin * Z.squaredNorm() + 1e-6 * Z.squaredNorm());
        prev = v;
      }
    }
  }
}

}  // namespace
