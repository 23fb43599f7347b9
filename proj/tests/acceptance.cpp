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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "pidcap/pidcap.hpp"

namespace {

using namespace pidcap;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* title, double time_limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool pass = out.pass;
  if (time_limit_s > 0.0 && elapsed >= time_limit_s) {
    pass = false;
    out.detail += "; over the time limit";
  }
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s | %s | %.2f s%s\n", pass ? "PASS" : "FAIL", id, title, out.detail.c_str(), elapsed,
              time_limit_s > 0.0 ? (" (limit " + std::to_string(static_cast<int>(time_limit_s)) + " s)").c_str()
                                 : "");
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 1. Vieta round trip on 1e4 random distinct triples in [-100, -0.01]^3.
Outcome vieta_round_trip() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-100.0, -0.01);
  int tested = 0, bad = 0;
  double worst = 0.0;
  while (tested < 10000) {
    std::array<double, 3> l{u(rng), u(rng), u(rng)};
    if (!pairwise_distinct({l[0], l[1], l[2]})) continue;
    ++tested;
    std::sort(l.begin(), l.end());
    const auto roots = gains_to_lambda(lambda_to_gains({l[0], l[1], l[2]}));
    double err = 0.0;
    for (std::size_t k = 0; k < 3; ++k) err = std::max(err, std::abs(roots[k] - l[k]) / std::abs(l[k]));
    worst = std::max(worst, err);
    if (!(err <= 1e-9)) ++bad;
  }
  return {bad == 0, fmt("%d triples, %d above 1e-9 relative, worst %.3g", tested, bad, worst)};
}

// 2. Corollary grid lies in the gain region.
Outcome corollary_containment() {
  int total = 0, bad = 0;
  for (double L : {0.1, 1.0, 10.0}) {
    const double a_lo = 5.05 * std::max(L, 1.0), a_hi = 100.0;
    for (int i = 0; i < 20; ++i) {
      const double eps = 0.01 + (0.24 - 0.01) * (i + 0.5) / 20.0;
      for (int j = 0; j < 20; ++j) {
        const double a = a_lo + (a_hi - a_lo) * (j + 0.5) / 20.0;
        ++total;
        if (!in_omega_k(corollary_gains(eps, a, LipschitzBound(L)), LipschitzBound(L)).member) ++bad;
      }
    }
  }
  return {bad == 0, fmt("%d grid points over L in {0.1, 1, 10}, %d outside the region", total, bad)};
}

// 3 and 4 share one batch of simulations.
Theorem1Result theorem1_run() {
  Theorem1Options opt;
  opt.L = 1.0;
  opt.epsilon = 0.1;
  opt.a = 10.0;
  opt.trials = 50;
  opt.seed = 0;
  opt.n = 1;
  opt.t_max = 400.0;
  opt.final_error_tol = 1e-6;
  return verify_theorem1(opt);
}

Outcome theorem1(const Theorem1Result& r) {
  int converged = 0, negative_rate = 0;
  double worst_error = 0.0, slowest = -INFINITY;
  for (const auto& t : r.trials) {
    if (t.outcome == "Converged" && t.final_error < 1e-6) ++converged;
    if (t.rate && *t.rate < 0.0) ++negative_rate;
    worst_error = std::max(worst_error, std::isnan(t.final_error) ? INFINITY : t.final_error);
    if (t.rate) slowest = std::max(slowest, *t.rate);
  }
  const int n = static_cast<int>(r.trials.size());
  const bool pass = r.in_region() && n == 50 && converged == n && negative_rate == n;
  return {pass, fmt("gains (%.4g, %.4g, %.4g) in region: %s; %d/%d converged with |e| < 1e-6 (worst %.3g); "
                    "%d/%d negative rates (slowest %.4g)",
                    r.gains.kp, r.gains.ki, r.gains.kd, r.in_region() ? "yes" : "no", converged, n, worst_error,
                    negative_rate, n, slowest)};
}

Outcome lyapunov(const Theorem1Result& r) {
  int ok = 0;
  double worst_increase = 0.0, worst_excess = -INFINITY;
  for (const auto& t : r.trials) {
    if (t.lyapunov.ok() && !t.lyapunov.values.empty()) ++ok;
    worst_increase = std::max(worst_increase, t.lyapunov.worst_increase);
    worst_excess = std::max(worst_excess, t.lyapunov.worst_bound_excess);
  }
  const int n = static_cast<int>(r.trials.size());
  return {n == 50 && ok == n,
          fmt("%d/%d trajectories certified; worst V increase %.3g V(0) (slack 1e-6); "
              "worst (Vdot - margin |Z|^2)/|Z|^2 = %.3g (slack 1e-6); margin %.6g",
              ok, n, worst_increase, worst_excess, r.certificate ? r.certificate->margin : NAN)};
}

// 5. Modal algebra for 100 region members and n = 1, 2, 3.
Outcome modal_algebra() {
  int checks = 0, bad = 0;
  double worst_recon = 0.0, worst_norm = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double L = 0.1 * std::pow(10.0, static_cast<double>(seed % 4));
    const auto lam = sample_omega_lambda(LipschitzBound(L), seed);
    for (int n : {1, 2, 3}) {
      const auto tf = build_modal_transform(lam, n);
      const Mat A = companion_matrix(lambda_to_gains(lam), n);
      const double recon = (tf.dense_P() * tf.dense_J() * tf.dense_P_inverse() - A).norm() / A.norm();
      const double ratio = p_prime_norm(tf) / h(lam);
      worst_recon = std::max(worst_recon, recon);
      worst_norm = std::max(worst_norm, ratio);
      ++checks;
      if (!(recon <= 1e-9) || !(ratio <= 1.0 + 1e-12)) ++bad;
    }
  }
  return {bad == 0, fmt("%d transforms; worst |PJP^-1 - A|/|A| = %.3g (tol 1e-9); worst |P'|/h = %.15g (tol 1+1e-12)",
                        checks, worst_recon, worst_norm)};
}

// 6. Finite escape from the cone vertex.
Outcome finite_escape() {
  int runs = 0, bad = 0;
  std::string fails;
  double worst_ratio = 0.0;
  for (double eps : {0.5, 1.0, 2.0}) {
    for (const PidGains g : {PidGains{0, 0, 0}, PidGains{-1, -1, -1}, PidGains{-12.11, -1.1, -11.2}}) {
      const auto r = run_escape_demo(eps, g, 0.0);
      ++runs;
      if (r.escaped) worst_ratio = std::max(worst_ratio, r.trajectory.as<FiniteEscape>().upper / r.escape_bound);
      if (!(r.escaped && r.within_bound && r.stays_in_cone && r.error_envelope && r.comparison_envelope)) {
        ++bad;
        fails += fmt(" [eps=%g gains=(%g,%g,%g)]", eps, g.kp, g.ki, g.kd);
      }
    }
  }
  return {bad == 0, fmt("%d configurations, %d failing%s; worst t_escape/bound = %.4g", runs, bad, fails.c_str(),
                        worst_ratio)};
}

// 7. Third-order divergence with k_i != 0 and L = 1.
Outcome third_order() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  int runs = 0, bad = 0, fallbacks = 0;
  double worst_cf = 0.0, worst_trace = 0.0, min_residual = INFINITY;
  while (runs < 20) {
    const PidGains g{u(rng), u(rng), u(rng)};
    if (g.ki == 0.0) continue;
    ++runs;
    const auto r = run_third_order_demo(g, LipschitzBound(1.0));
    double scale = 1.0;
    for (const auto& z : r.spectrum.eigenvalues) scale = std::max(scale, std::abs(z));
    worst_trace = std::max(worst_trace, std::abs(r.spectrum.real_part_sum - r.c) / scale);
    worst_cf = std::max(worst_cf, r.worst_closed_form_error);
    for (double v : r.R_residuals) min_residual = std::min(min_residual, v);
    if (r.start.complex_fallback()) ++fallbacks;
    if (!(r.spectrum.distinct && r.R_clear && r.trace_identity && r.closed_form_agrees && r.diverged &&
          r.unstable_mode)) {
      ++bad;
    }
  }
  return {bad == 0, fmt("%d gain triples, %d failing; min R residual %.3g (tol 1e-9); worst trace error %.3g "
                        "(tol 1e-9); worst closed-form error %.3g (tol 1e-6); %d real-part/imaginary-part starts",
                        runs, bad, min_residual, worst_trace, worst_cf, fallbacks)};
}

// 8. Integrator order and escape bracketing.
Outcome integrator_checks() {
  const VectorField decay = [](const Vec& y) -> Vec { return -y; };
  const auto max_err = [&](double h) {
    IntegratorConfig cfg;
    cfg.method = Method::Rk4Fixed;
    cfg.step = h;
    cfg.t_max = 2.0;
    cfg.detect_convergence = false;
    Vec y0(1);
    y0 << 1.0;
    const auto traj = integrate(decay, y0, cfg);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      worst = std::max(worst, std::abs(traj.states[k](0) - std::exp(-traj.times[k])));
    }
    return worst;
  };
  const double ratio = max_err(0.1) / max_err(0.05);

  IntegratorConfig cfg;
  cfg.t_max = 5.0;
  Vec y0(1);
  y0 << 1.0;
  const auto traj = integrate([](const Vec& y) -> Vec { return y.array().square().matrix(); }, y0, cfg);
  bool bracket_ok = false;
  double lo = NAN, hi = NAN;
  if (traj.is<FiniteEscape>()) {
    lo = traj.as<FiniteEscape>().lower;
    hi = traj.as<FiniteEscape>().upper;
    bracket_ok = lo <= 1.0 && 1.0 <= hi && hi - lo < 1e-6;
  }
  return {ratio >= 12.0 && ratio <= 20.0 && bracket_ok,
          fmt("RK4 error ratio %.4g (range [12, 20]); y'=y^2 bracket [%.15g, %.15g], width %.3g (tol 1e-6)", ratio, lo,
              hi, hi - lo)};
}

// 9. Gains with an unstable closed-loop root do not regulate the zero plant.
Outcome negative_control() {
  const PidGains g{1.0, 1.0, 1.0};  // l^3 - l^2 - l - 1 has a root near 1.839
  const auto report = in_omega_k(g, LipschitzBound(0.0));
  double max_re = -INFINITY;
  for (const auto& z : report.roots) max_re = std::max(max_re, z.real());
  Vec sp(1), x1(1), x2(1);
  sp << 1.0;
  x1 << 0.0;
  x2 << 0.0;
  const SecondOrderLoop loop(catalog_lookup("zero"), g, sp);
  IntegratorConfig cfg;
  cfg.t_max = 20.0;
  cfg.equilibrium = loop.equilibrium();
  const auto traj =
      integrate([&loop](const Vec& y) { return loop.field(y); }, initial_state_from_physical(x1, x2, sp), cfg);
  const double initial = (x1 - sp).norm();
  const double final_err = (traj.final_state().segment(1, 1) - sp).norm();
  const bool pass = max_re > 0.0 && !report.member && !traj.is<Converged>() && final_err > initial;
  return {pass, fmt("max root real part %.6g; region member: %s; outcome %s; |e| %.3g -> %.3g", max_re,
                    report.member ? "yes" : "no", outcome_name(traj.outcome).c_str(), initial, final_err)};
}

}  // namespace

int main() {
  run(1, "Vieta round trip", 5.0, vieta_round_trip);
  run(2, "corollary family inside the gain region", 0.0, corollary_containment);

  Theorem1Result thm;
  run(3, "global regulation of random Lipschitz plants", 120.0, [&] {
    thm = theorem1_run();
    return theorem1(thm);
  });
  run(4, "Lyapunov certificate along the criterion 3 trajectories", 0.0, [&] { return lyapunov(thm); });
  run(5, "modal transform algebra", 0.0, modal_algebra);
  run(6, "finite escape under superlinear growth", 30.0, finite_escape);
  run(7, "unbounded error for third-order plants", 0.0, third_order);
  run(8, "integrator order and escape bracket", 0.0, integrator_checks);
  run(9, "negative control outside the region", 0.0, negative_control);

  std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
