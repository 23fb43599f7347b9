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
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pidcap/certificates.hpp"
#include "pidcap/closed_loop.hpp"
#include "pidcap/gain_design.hpp"
#include "pidcap/integrator.hpp"
#include "pidcap/plants.hpp"

namespace pidcap {

// ---------------------------------------------------------------------------
// Lyapunov certificate along a recorded trajectory.

struct LyapunovTrace {
  std::vector<double> values;      // V(Z(t_k))
  double worst_increase = 0.0;     // max_k V_k - V_{k-1}, scaled by V_0
  double worst_bound_excess = 0.0; // max_k (Vdot - margin |Z|^2) / |Z|^2
  bool non_increasing = true;
  bool bound_holds = true;

  bool ok() const noexcept { return non_increasing && bound_holds; }
};

/// Checks V(Z(t)) along the recorded samples against both the monotone
/// decrease (slack 1e-6 V(Z(0))) and the pointwise derivative bound
/// Vdot <= margin |Z|^2 (slack 1e-6 |Z|^2).
inline LyapunovTrace check_lyapunov_along(const SecondOrderLoop& loop, const ModalTransform& tf, double margin,
                                          const Trajectory& traj) {
  constexpr double kSlack = 1e-6;
  LyapunovTrace trace;
  trace.values.reserve(traj.states.size());
  for (const auto& s : traj.states) trace.values.push_back(lyapunov_value(tf.to_modal(proof_coordinates(loop, s)), tf.lam));
  const double v0 = trace.values.empty() ? 0.0 : trace.values.front();
  for (std::size_t k = 1; k < trace.values.size(); ++k) {
    const double inc = trace.values[k] - trace.values[k - 1];
    if (v0 > 0.0) trace.worst_increase = std::max(trace.worst_increase, inc / v0);
    if (inc > kSlack * v0) trace.non_increasing = false;
  }
  trace.worst_bound_excess = -INFINITY;
  for (const auto& s : traj.states) {
    const double z2 = tf.to_modal(proof_coordinates(loop, s)).squaredNorm();
    if (!(z2 > 0.0)) continue;
    const double excess = lyapunov_derivative_along(loop, tf, s) - margin * z2;
    trace.worst_bound_excess = std::max(trace.worst_bound_excess, excess / z2);
    if (excess > kSlack * z2) trace.bound_holds = false;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Global regulation under gains from the sufficient region.

struct Theorem1Options {
  double L = 1.0;
  int trials = 50;
  std::uint64_t seed = 0;
  int n = 1;
  double epsilon = 0.1;
  std::optional<double> a;           // defaults to 1.02 max(5L, 5)
  std::optional<PidGains> gains;     // overrides the corollary family
  std::optional<PlantFunction> plant;  // fixed plant instead of random draws
  double t_max = 400.0;
  double final_error_tol = 1e-6;
  unsigned threads = 0;
};

struct Theorem1Trial {
  std::string plant_label;
  double plant_L = 0.0;
  Vec setpoint;
  Vec initial_state;
  std::string outcome;
  double final_error = NAN;  // ||x1 - y*|| at the last sample
  std::optional<double> rate;
  LyapunovTrace lyapunov;
  std::string error;

  bool passed(double final_error_tol) const {
    return error.empty() && outcome == "Converged" && final_error < final_error_tol && rate && *rate < 0.0 &&
           lyapunov.ok();
  }
};

struct Theorem1Result {
  PidGains gains;
  RegionReport region;
  std::optional<LyapunovCertificate> certificate;
  std::vector<Theorem1Trial> trials;
  int passed = 0;
  bool in_region() const noexcept { return region.member; }
};

inline IntegratorConfig theorem1_integrator_config(double t_max) {
  IntegratorConfig cfg;
  cfg.method = Method::Rk45Adaptive;
  cfg.step = 1e-3;
  cfg.t_max = t_max;
  cfg.max_step = 1.0;
  return cfg;
}

inline Theorem1Result verify_theorem1(const Theorem1Options& opt) {
  const LipschitzBound L(opt.L);
  if (opt.n < 1) throw Error(ErrorCode::BadParams, "dimension n must be >= 1");
  if (opt.plant && opt.plant->dim_n != opt.n) throw Error(ErrorCode::BadParams, "plant dimension differs from n");
  Theorem1Result result;
  result.gains = opt.gains ? *opt.gains
                           : corollary_gains(opt.epsilon, opt.a.value_or(1.02 * std::max(5.0 * opt.L, 5.0)), L);
  result.region = in_omega_k(result.gains, L);

  std::optional<ModalTransform> tf;
  if (result.region.member) {
    result.certificate = make_lyapunov_certificate(result.region.triple, L);
    tf = build_modal_transform(result.region.triple, opt.n);
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> setpoint_draw(-10.0, 10.0);
  std::uniform_real_distribution<double> state_draw(-50.0, 50.0);

  std::vector<SecondOrderLoop> loops;
  std::vector<BatchItem> items;
  const IntegratorConfig base = theorem1_integrator_config(opt.t_max);
  for (int k = 0; k < opt.trials; ++k) {
    PlantFunction plant = opt.plant ? *opt.plant : random_lipschitz_plant(opt.n, opt.L, rng);
    Vec setpoint(opt.n), x1(opt.n), x2(opt.n);
    for (int i = 0; i < opt.n; ++i) setpoint(i) = setpoint_draw(rng);
    for (int i = 0; i < opt.n; ++i) x1(i) = state_draw(rng);
    for (int i = 0; i < opt.n; ++i) x2(i) = state_draw(rng);
    loops.emplace_back(std::move(plant), result.gains, setpoint);
    Theorem1Trial trial;
    trial.plant_label = loops.back().plant().label;
    trial.plant_L = loops.back().plant().declared_L.value_or(NAN);
    trial.setpoint = setpoint;
    trial.initial_state = initial_state_from_physical(x1, x2, setpoint);
    result.trials.push_back(std::move(trial));
  }
  for (std::size_t k = 0; k < loops.size(); ++k) {
    IntegratorConfig cfg = base;
    if (result.gains.ki != 0.0) cfg.equilibrium = loops[k].equilibrium();
    const SecondOrderLoop* loop = &loops[k];
    items.push_back({[loop](const Vec& y) { return loop->field(y); }, result.trials[k].initial_state, cfg});
  }

  const auto runs = integrate_batch(items, base, opt.threads);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    auto& trial = result.trials[k];
    if (!runs[k].ok()) {
      trial.error = runs[k].message;
      continue;
    }
    const Trajectory& traj = *runs[k].trajectory;
    const int n = opt.n;
    trial.outcome = outcome_name(traj.outcome);
    trial.final_error = (traj.final_state().segment(n, n) - loops[k].setpoint()).norm();
    try {
      const Vec eq = result.gains.ki != 0.0 ? loops[k].equilibrium() : Vec::Zero(3 * n);
      trial.rate = exponential_rate_fit(traj, eq);
    } catch (const Error&) {
    }
    if (tf) trial.lyapunov = check_lyapunov_along(loops[k], *tf, result.certificate->margin, traj);
    if (trial.passed(opt.final_error_tol)) ++result.passed;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Finite escape under superlinear growth.

struct EscapeDemoResult {
  double epsilon = 0.0;
  PidGains gains;
  double setpoint = 0.0;
  double L_cone = 0.0;
  double escape_bound = 0.0;
  ConeInequalityMargins margins;
  Trajectory trajectory;
  bool escaped = false;
  bool stays_in_cone = true;
  bool within_bound = false;
  bool error_envelope = true;       // e(t) >= L + (L+1) t
  bool comparison_envelope = true;  // y2(t) >= comparison lower bound
  bool divergence_envelope_holds = true;  // e >= divergence envelope in y2 (eps <= 1 only)
  double min_error_margin = INFINITY;
  double min_comparison_margin = INFINITY;

  bool passed() const noexcept {
    return escaped && stays_in_cone && within_bound && error_envelope && comparison_envelope &&
           divergence_envelope_holds;
  }
};

inline EscapeDemoResult run_escape_demo(double epsilon, const PidGains& gains, double setpoint) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::ParameterOutOfRange, "eps must be > 0 for the escape demonstration");
  }
  EscapeDemoResult r;
  r.epsilon = epsilon;
  r.gains = gains;
  r.setpoint = setpoint;
  r.L_cone = pick_cone_parameter(gains, epsilon, setpoint);
  r.escape_bound = escape_time_bound(epsilon, r.L_cone);
  const SuperlinearLoop loop(epsilon, gains, setpoint);
  r.margins = sample_cone_margins(loop, r.L_cone, kConeSamples);

  // x1(0) = L + y*, x2(0) = L + 1, i.e. the cone vertex in error coordinates
  Vec x1(1), x2(1), sp(1);
  x1 << r.L_cone + setpoint;
  x2 << r.L_cone + 1.0;
  sp << setpoint;
  const Vec y0 = error_coordinates(initial_state_from_physical(x1, x2, sp), sp);

  IntegratorConfig cfg;
  cfg.method = Method::Rk45Adaptive;
  cfg.t_max = 2.0 * r.escape_bound;
  cfg.step = 1e-6 * r.escape_bound;
  cfg.detect_convergence = false;
  r.trajectory = integrate([&loop](const Vec& y) { return loop.field(y); }, y0, cfg);

  r.escaped = r.trajectory.is<FiniteEscape>();
  if (r.escaped) r.within_bound = r.trajectory.as<FiniteEscape>().upper <= r.escape_bound;

  const ConeCL cone{r.L_cone};
  for (std::size_t k = 0; k < r.trajectory.times.size(); ++k) {
    const double t = r.trajectory.times[k];
    const Vec& y = r.trajectory.states[k];
    if (!cone_contains(cone, Eigen::Vector3d(y))) r.stays_in_cone = false;
    const double em = y(1) - linear_error_lower_bound(r.L_cone, t);
    r.min_error_margin = std::min(r.min_error_margin, em);
    if (em < 0.0) r.error_envelope = false;
    if (t < r.escape_bound) {
      const double cm = y(2) - comparison_lower_bound(epsilon, r.L_cone, t);
      r.min_comparison_margin = std::min(r.min_comparison_margin, cm);
      if (cm < 0.0) r.comparison_envelope = false;
    } else {
      r.comparison_envelope = false;
    }
    if (epsilon <= 1.0 && y(1) < divergence_envelope(epsilon, r.L_cone, y(2))) r.divergence_envelope_holds = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Unbounded error for third-order plants.

inline constexpr double kThirdOrderDivergence = 1e6;
inline constexpr double kClosedFormWindow = 1e8;
inline constexpr double kClosedFormTol = 1e-6;

struct ThirdOrderDemoResult {
  PidGains gains;
  double L = 0.0;
  double c = 0.0;
  SpectralReport spectrum;
  std::vector<double> R_residuals;
  Prop3Start start;
  Trajectory trajectory;
  bool diverged = false;
  double t_divergence = NAN;
  double worst_closed_form_error = 0.0;  // relative, over samples with ||y|| <= 1e8
  int closed_form_samples = 0;
  bool closed_form_agrees = false;
  bool trace_identity = false;
  bool unstable_mode = false;
  bool R_clear = false;

  bool passed() const noexcept { return diverged && closed_form_agrees && trace_identity && unstable_mode && R_clear; }
};

/// Error mismatch |e_num - e_cf| relative to max(1, max_{s<=t} |e_cf(s)|):
/// the running amplitude keeps the measure meaningful at sign changes of an
/// oscillating closed form.
inline ThirdOrderDemoResult run_third_order_demo(const PidGains& gains, LipschitzBound L) {
  ThirdOrderDemoResult r;
  r.gains = gains;
  r.L = L.value();
  const bool reduced = gains.ki == 0.0;
  r.c = reduced ? select_c_reduced(gains, L) : select_c_lemma_a(gains, L);
  const auto loop = ThirdOrderLoop(gains, r.c, reduced);
  r.spectrum = spectral_report(loop);
  r.R_residuals = repeated_root_residuals(gains, r.c, reduced);
  r.R_clear = std::all_of(r.R_residuals.begin(), r.R_residuals.end(), [](double v) { return v > 1e-9; });
  if (reduced) {
    // w = 0 lies in R when kp = 0 and is harmless there
    r.R_clear = r.spectrum.distinct;
    for (std::size_t i = 0; i < r.R_residuals.size(); ++i) {
      if (std::abs(r.spectrum.multiple_root_set_R[i]) > 1e-12 && !(r.R_residuals[i] > 1e-9)) r.R_clear = false;
    }
  }
  double scale = 1.0;
  for (const auto& z : r.spectrum.eigenvalues) scale = std::max(scale, std::abs(z));
  r.trace_identity = std::abs(r.spectrum.real_part_sum - r.c) <= 1e-9 * scale;
  r.unstable_mode = r.spectrum.max_real_part > 0.0;

  r.start = prop3_initial_condition(gains, r.c, reduced);
  const int e_idx = loop.error_index();

  IntegratorConfig cfg;
  cfg.method = Method::Rk45Adaptive;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-14;
  cfg.step = 1e-4;
  cfg.blowup_norm = 1e200;
  cfg.detect_convergence = false;
  const double growth = std::max(r.spectrum.max_real_part, 1e-6);
  cfg.t_max = 10.0 * (std::log(kThirdOrderDivergence) + 30.0) / growth;
  cfg.max_step = std::max(0.1, 0.05 / growth);
  cfg.stop_when = [e_idx](double, const Vec& y) { return std::abs(y(e_idx)) > kThirdOrderDivergence; };
  r.trajectory = integrate([&loop](const Vec& y) { return loop.field(y); }, r.start.y0, cfg);
  r.diverged = r.trajectory.is<Diverged>();
  if (r.diverged) r.t_divergence = r.trajectory.as<Diverged>().t_threshold;

  double amplitude = 1.0;
  for (std::size_t k = 0; k < r.trajectory.times.size(); ++k) {
    const Vec& y = r.trajectory.states[k];
    if (y.norm() > kClosedFormWindow) break;
    const double cf = r.start.closed_form(r.trajectory.times[k]);
    amplitude = std::max(amplitude, std::abs(cf));
    r.worst_closed_form_error = std::max(r.worst_closed_form_error, std::abs(y(e_idx) - cf) / amplitude);
    ++r.closed_form_samples;
  }
  r.closed_form_agrees = r.closed_form_samples > 0 && r.worst_closed_form_error <= kClosedFormTol;
  return r;
}

}  // namespace pidcap
