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
#include <numbers>
#include <random>
#include <string>

#include "pidcap/plants.hpp"

namespace {

using namespace pidcap;

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

TEST(Catalog, ZeroPlant) {
  const auto f = catalog_lookup("zero");
  EXPECT_EQ(f(v1(3.0), v1(-7.0))(0), 0.0);
  EXPECT_EQ(f.declared_L.value(), 0.0);
}

TEST(Catalog, SineMixDeclaredL) {
  const auto f = catalog_lookup("sine_mix", {{"alpha", 0.6}, {"beta", 0.8}});
  EXPECT_NEAR(*f.declared_L, 1.0, 1e-15);
  EXPECT_NEAR(f(v1(0.3), v1(1.2))(0), 0.6 * std::sin(0.3) + 0.8 * std::cos(1.2), 1e-15);
}

TEST(Catalog, PowerLaw) {
  const auto f = catalog_lookup("power_law", {{"eps", 1.0}});
  EXPECT_NEAR(f(v1(3.0), v1(4.0))(0), 25.0, 1e-12);
  EXPECT_FALSE(f.globally_lipschitz());
  EXPECT_EQ(f(v1(0.0), v1(0.0))(0), 0.0);
}

TEST(Catalog, PendulumAndSpring) {
  const auto p = catalog_lookup("pendulum", {{"g", 9.81}, {"l", 2.0}, {"c", 0.5}});
  EXPECT_NEAR(p(v1(1.0), v1(2.0))(0), -4.905 * std::sin(1.0) - 1.0, 1e-14);
  EXPECT_NEAR(*p.declared_L, std::hypot(4.905, 0.5), 1e-15);
  const auto s = catalog_lookup("damped_spring", {{"k", 3.0}, {"c", 4.0}});
  EXPECT_DOUBLE_EQ(s(v1(1.0), v1(1.0))(0), -7.0);
  EXPECT_DOUBLE_EQ(*s.declared_L, 5.0);
}

TEST(Catalog, LinearOperatorNorm) {
  const auto f = catalog_lookup("linear", {{"n", 2}, {"a1_1", 3.0}, {"a2_4", -4.0}});
  EXPECT_EQ(f.dim_n, 2);
  EXPECT_NEAR(*f.declared_L, 4.0, 1e-14);
  Vec x(2), v(2);
  x << 1.0, 2.0;
  v << 3.0, 5.0;
  const Vec out = f(x, v);
  EXPECT_DOUBLE_EQ(out(0), 3.0);
  EXPECT_DOUBLE_EQ(out(1), -20.0);
}

TEST(Catalog, Errors) {
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InsufficientData;  // sentinel: nothing thrown
  };
  EXPECT_EQ(code_of([] { catalog_lookup("nope"); }), ErrorCode::UnknownPlant);
  EXPECT_EQ(code_of([] { catalog_lookup("power_law", {{"eps", -0.5}}); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([] { catalog_lookup("sine_mix", {{"gamma", 1.0}}); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([] { catalog_lookup("zero", {{"n", 0.5}}); }), ErrorCode::BadParams);
}

TEST(EstimateLipschitz, Oracles) {
  EXPECT_EQ(estimate_lipschitz(catalog_lookup("zero"), 10.0, 1000, 0), 0.0);
  Mat A(1, 2);
  A << 0.0, 0.5;
  const double lin = estimate_lipschitz(make_linear_plant(A), 10.0, 5000, 0);
  EXPECT_GE(lin, 0.49);
  EXPECT_LE(lin, 0.5 * (1.0 + 1e-12));
  EXPECT_GT(estimate_lipschitz(catalog_lookup("power_law", {{"eps", 1.0}}), 10.0, 5000, 0), 10.0);
  EXPECT_THROW(estimate_lipschitz(catalog_lookup("zero"), 10.0, 1, 0), Error);
}

TEST(EstimateLipschitz, Deterministic) {
  const auto f = catalog_lookup("sine_mix", {{"alpha", 0.6}, {"beta", 0.8}});
  EXPECT_EQ(estimate_lipschitz(f, 5.0, 500, 17), estimate_lipschitz(f, 5.0, 500, 17));
}

TEST(Shift, Oracles) {
  Vec y(1);
  y << 4.0;
  const auto z = shift_nonlinearity(catalog_lookup("zero"), y);
  EXPECT_EQ(z(v1(1.0), v1(2.0))(0), 0.0);

  const auto s = shift_nonlinearity(make_sine_mix_plant(1.0, 0.0), v1(std::numbers::pi / 2));
  EXPECT_NEAR(s(v1(0.7), v1(0.3))(0), std::sin(0.7 + std::numbers::pi / 2) - 1.0, 1e-15);
  EXPECT_EQ(s(v1(0.0), v1(0.0))(0), 0.0);
}

// ---------------------------------------------------------------------------
// Properties

TEST(PlantProperty, EstimateNeverExceedsDeclared) {
  const std::vector<std::pair<std::string, PlantParams>> catalog{
      {"zero", {}},
      {"linear", {{"a1_1", -2.0}, {"a1_2", 1.5}}},
      {"linear", {{"n", 2}, {"a1_1", 1.0}, {"a1_3", 2.0}, {"a2_2", -1.0}, {"a2_4", 0.5}}},
      {"sine_mix", {{"alpha", 0.6}, {"beta", 0.8}}},
      {"sine_mix", {{"alpha", -3.0}, {"beta", 1.0}, {"n", 3}}},
      {"pendulum", {{"c", 0.7}}},
      {"damped_spring", {{"k", 2.0}, {"c", 1.0}}},
  };
  for (const auto& [name, params] : catalog) {
    const auto f = catalog_lookup(name, params);
    for (double radius : {0.1, 1.0, 10.0, 1000.0}) {
      for (std::uint64_t seed : {0u, 1u, 2u}) {
        EXPECT_LE(estimate_lipschitz(f, radius, 2000, seed), *f.declared_L * (1.0 + 1e-6)) << name;
      }
    }
  }
}

TEST(PlantProperty, RandomPlantsRespectBound) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 60; ++k) {
    const int n = 1 + k % 3;
    const auto f = random_lipschitz_plant(n, 1.0, rng);
    EXPECT_LE(*f.declared_L, 1.0 + 1e-12);
    EXPECT_LE(estimate_lipschitz(f, 20.0, 1000, static_cast<std::uint64_t>(k)), *f.declared_L * (1.0 + 1e-6));
  }
}

TEST(PlantProperty, ShiftPreservesDifferenceQuotients) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_lipschitz_plant(1, 2.0, rng);
    const Vec s = v1(u(rng));
    const auto g = shift_nonlinearity(f, s);
    // Quotients of g at (p - s, q - s) equal those of f at (p, q).
    for (int j = 0; j < 50; ++j) {
      const Vec p1 = v1(u(rng)), p2 = v1(u(rng)), q1 = v1(u(rng)), q2 = v1(u(rng));
      const double dist = std::hypot(p1(0) - q1(0), p2(0) - q2(0));
      const double qf = (f(p1, p2) - f(q1, q2)).norm() / dist;
      const double qg = (g(p1 - s, p2) - g(q1 - s, q2)).norm() / dist;
      EXPECT_NEAR(qg, qf, 1e-9 * std::max(1.0, qf));
    }
    EXPECT_LE(estimate_lipschitz(g, 5.0, 400, 3), *f.declared_L * (1.0 + 1e-6));
    EXPECT_EQ(g(v1(0.0), v1(0.0))(0), 0.0);
  }
}

TEST(PlantProperty, PowerLawViolatesEveryBound) {
  for (double eps : {0.5, 1.0, 2.0}) {
    const auto f = catalog_lookup("power_law", {{"eps", eps}});
    for (double L : {1.0, 10.0, 100.0}) {
      const double radius = 4.0 * std::pow(L, 1.0 / eps) + 10.0;
      EXPECT_GT(estimate_lipschitz(f, radius, 4000, 0), L) << "eps=" << eps << " L=" << L;
    }
  }
}

}  // namespace
