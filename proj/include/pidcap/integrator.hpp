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
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pidcap/error.hpp"
#include "pidcap/types.hpp"

namespace pidcap {

using VectorField = std::function<Vec(const Vec&)>;

enum class Method { Rk4Fixed, Rk45Adaptive };

struct IntegratorConfig {
  Method method = Method::Rk45Adaptive;
  double step = 1e-3;  // fixed step, or the first trial step when adaptive
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = INFINITY;  // adaptive only
  double t_max = 100.0;
  double blowup_norm = 1e12;
  double converge_norm = 1e-9;
  double converge_window = 1.0;
  int record_stride = 1;
  // Relative width the escape bracket is refined to.
  double escape_rel_tol = 1e-6;
  // Convergence is measured as ||state - equilibrium||; zero when unset.
  std::optional<Vec> equilibrium;
  bool detect_convergence = true;
  // Optional divergence event; when it fires the run ends as Diverged.
  std::function<bool(double t, const Vec& state)> stop_when;

  void validate() const {
    const auto bad = [](const std::string& what) { throw Error(ErrorCode::ParameterOutOfRange, what); };
    if (!(step > 0.0)) bad("step must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) bad("t_max must be positive and finite");
    if (method == Method::Rk45Adaptive && !(rel_tol > 0.0 && abs_tol > 0.0)) bad("tolerances must be positive");
    if (!(converge_norm > 0.0) || !(blowup_norm > converge_norm)) bad("need blowup_norm > converge_norm > 0");
    if (!(converge_window >= 0.0)) bad("converge_window must be nonnegative");
    if (record_stride < 1) bad("record_stride must be >= 1");
    if (!(escape_rel_tol > 0.0)) bad("escape_rel_tol must be positive");
    if (!(max_step > 0.0)) bad("max_step must be positive");
  }
};

struct Converged {
  double final_error = 0.0;
};
/// The state norm crossed blowup_norm. [lower, upper] brackets the crossing:
/// the state is below the threshold at `lower` and the integrator cannot
/// advance to `upper` without exceeding it.
struct FiniteEscape {
  double t_escape = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};
struct MaxTimeReached {
  double final_error = 0.0;
};
struct Diverged {
  double t_threshold = 0.0;
};

using Outcome = std::variant<Converged, FiniteEscape, MaxTimeReached, Diverged>;

inline std::string outcome_name(const Outcome& o) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Converged>) return "Converged";
        else if constexpr (std::is_same_v<T, FiniteEscape>) return "FiniteEscape";
        else if constexpr (std::is_same_v<T, MaxTimeReached>) return "MaxTimeReached";
        else return "Diverged";
      },
      o);
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  Outcome outcome = MaxTimeReached{};
  bool stiffness_suspected = false;
  long steps_accepted = 0;
  long steps_rejected = 0;

  template <class T>
  bool is() const noexcept { return std::holds_alternative<T>(outcome); }
  template <class T>
  const T& as() const { return std::get<T>(outcome); }
  const Vec& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

namespace detail {

struct StepResult {
  Vec state;
  double error_norm = 0.0;  // scaled, adaptive only
  bool crossed = false;     // a stage or the result left the finite/bounded region
};

class Stepper {
 public:
  Stepper(const VectorField& field, const IntegratorConfig& cfg) : field_(field), cfg_(cfg) {}

  StepResult step(const Vec& y, double h) const {
    return cfg_.method == Method::Rk4Fixed ? rk4(y, h) : dopri(y, h);
  }

 private:
  // Evaluates the field; returns false when the stage state itself is out of range.
  bool eval(const Vec& s, Vec& k) const {
    if (!s.allFinite() || s.norm() > cfg_.blowup_norm) return false;
    k = field_(s);
    if (!k.allFinite()) {
      throw Error(ErrorCode::NonFiniteDerivative, "field is not finite at state " + describe(s));
    }
    return true;
  }

  static std::string describe(const Vec& s) {
    std::string out = "(";
    for (Eigen::Index i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s(i));
    return out + ")";
  }

  StepResult rk4(const Vec& y, double h) const {
    StepResult r;
    Vec k1, k2, k3, k4;
    if (!eval(y, k1) || !eval(y + 0.5 * h * k1, k2) || !eval(y + 0.5 * h * k2, k3) || !eval(y + h * k3, k4)) {
      r.crossed = true;
      return r;
    }
    r.state = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r.crossed = !r.state.allFinite() || r.state.norm() > cfg_.blowup_norm;
    return r;
  }

  // Dormand-Prince 5(4), local extrapolation.
  StepResult dopri(const Vec& y, double h) const {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                            a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0, e4 = b4 - 393.0 / 640.0,
                            e5 = b5 + 92097.0 / 339200.0, e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;

    StepResult r;
    Vec k1, k2, k3, k4, k5, k6, k7;
    if (!eval(y, k1) || !eval(y + h * (a21 * k1), k2) || !eval(y + h * (a31 * k1 + a32 * k2), k3) ||
        !eval(y + h * (a41 * k1 + a42 * k2 + a43 * k3), k4) ||
        !eval(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5) ||
        !eval(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6)) {
      r.crossed = true;
      return r;
    }
    r.state = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    if (!eval(r.state, k7)) {
      r.crossed = true;
      return r;
    }
    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y(i)), std::abs(r.state(i)));
      worst = std::max(worst, std::abs(err(i)) / scale);
    }
    r.error_norm = worst;
    return r;
  }

  const VectorField& field_;
  const IntegratorConfig& cfg_;
};

}  // namespace detail

/// Integrates the autonomous system y' = field(y) from y0 over [0, t_max].
///
/// Outcome rules:
///   Converged       ||y - equilibrium|| < converge_norm for converge_window seconds
///   FiniteEscape    the norm crosses blowup_norm; the failing step is halved
///                   until it is below escape_rel_tol * t
///   Diverged        cfg.stop_when fired
///   MaxTimeReached  none of the above by t_max
///
/// Adaptive steps are floored at 1e-14 * t_max; a step forced through at the
/// floor sets stiffness_suspected.
inline Trajectory integrate(const VectorField& field, const Vec& y0, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!y0.allFinite()) throw Error(ErrorCode::BadParams, "initial state is not finite");
  if (cfg.equilibrium && cfg.equilibrium->size() != y0.size()) {
    throw Error(ErrorCode::BadParams, "equilibrium dimension mismatch");
  }

  const detail::Stepper stepper(field, cfg);
  const bool adaptive = cfg.method == Method::Rk45Adaptive;
  const double floor_step = 1e-14 * cfg.t_max;
  const auto deviation = [&](const Vec& y) { return cfg.equilibrium ? (y - *cfg.equilibrium).norm() : y.norm(); };

  Trajectory traj;
  double t = 0.0;
  Vec y = y0;
  traj.times.push_back(t);
  traj.states.push_back(y);
  {
    const Vec k = field(y);
    if (!k.allFinite()) throw Error(ErrorCode::NonFiniteDerivative, "field is not finite at the initial state");
  }

  double h = adaptive ? std::min(cfg.step, cfg.max_step) : cfg.step;
  double below_since = NAN;
  std::optional<Outcome> outcome;
  bool last_recorded = true;

  if (cfg.detect_convergence && deviation(y) < cfg.converge_norm) below_since = 0.0;

  while (!outcome && t < cfg.t_max) {
    const double trial = std::min(h, cfg.t_max - t);
    detail::StepResult r = stepper.step(y, trial);

    if (r.crossed) {
      const double width_tol = cfg.escape_rel_tol * std::max(t, 1e-9);
      if (trial <= width_tol) {
        const double upper = t + std::max(trial, 0.5 * width_tol);
        outcome = FiniteEscape{t, t, upper};
        break;
      }
      h = 0.5 * trial;
      ++traj.steps_rejected;
      continue;
    }

    double next_h = h;
    if (adaptive) {
      const double err = r.error_norm;
      const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err > 1.0) {
        if (trial > floor_step) {
          h = std::max(trial * factor, floor_step);
          ++traj.steps_rejected;
          continue;
        }
        traj.stiffness_suspected = true;
      }
      next_h = std::min(std::max(trial * factor, floor_step), cfg.max_step);
    }

    t = (trial == cfg.t_max - t) ? cfg.t_max : t + trial;
    y = std::move(r.state);
    h = adaptive ? next_h : h;
    ++traj.steps_accepted;
    last_recorded = traj.steps_accepted % cfg.record_stride == 0;
    if (last_recorded) {
      traj.times.push_back(t);
      traj.states.push_back(y);
    }

    if (cfg.detect_convergence) {
      const double dev = deviation(y);
      if (dev < cfg.converge_norm) {
        if (std::isnan(below_since)) below_since = t;
        if (t - below_since >= cfg.converge_window) outcome = Converged{dev};
      } else {
        below_since = NAN;
      }
    }
    if (!outcome && cfg.stop_when && cfg.stop_when(t, y)) outcome = Diverged{t};
  }

  if (!last_recorded) {
    traj.times.push_back(t);
    traj.states.push_back(y);
  }
  traj.outcome = outcome ? *outcome : Outcome{MaxTimeReached{deviation(y)}};
  return traj;
}

struct BatchItem {
  VectorField field;
  Vec y0;
  std::optional<IntegratorConfig> config;  // overrides the shared config
};

struct BatchResult {
  std::optional<Trajectory> trajectory;
  std::optional<ErrorCode> error;
  std::string message;

  bool ok() const noexcept { return trajectory.has_value(); }
};

/// Integrates every item; per-item failures are collected, never thrown.
/// Results are index-aligned with the input whatever the thread count.
inline std::vector<BatchResult> integrate_batch(const std::vector<BatchItem>& items, const IntegratorConfig& cfg,
                                                unsigned threads = 0) {
  std::vector<BatchResult> results(items.size());
  const auto run_one = [&](std::size_t i) {
    try {
      results[i].trajectory = integrate(items[i].field, items[i].y0, items[i].config.value_or(cfg));
    } catch (const Error& e) {
      results[i].error = e.code();
      results[i].message = e.what();
    } catch (const std::exception& e) {
      results[i].error = ErrorCode::BadParams;
      results[i].message = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, items.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < items.size(); i = next++) run_one(i);
      });
    }
  }
  return results;
}

}  // namespace pidcap
