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

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pidcap/certificates.hpp"
#include "pidcap/closed_loop.hpp"
#include "pidcap/gain_design.hpp"
#include "pidcap/integrator.hpp"
#include "pidcap/io.hpp"
#include "pidcap/plants.hpp"
#include "pidcap/verification.hpp"

namespace pidcap::cli {

using Json = nlohmann::ordered_json;

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNonFinite = 3;
inline constexpr int kExitInconclusive = 4;

inline int exit_code(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pass:
      return kExitPass;
    case Verdict::Fail:
      return kExitFail;
    case Verdict::Inconclusive:
      return kExitInconclusive;
  }
  return kExitUsage;
}

inline int exit_code(ErrorCode c) noexcept { return c == ErrorCode::NonFiniteDerivative ? kExitNonFinite : kExitUsage; }

struct RunReport {
  std::string command;
  Json inputs = Json::object();
  Json results = Json::object();
  std::vector<std::string> trajectories;  // files written by the run
  Verdict verdict = Verdict::Fail;
  std::uint64_t seed = 0;
  std::function<void(std::ostream&)> csv;  // tabular payload for --format csv

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["results"] = results;
    j["trajectories"] = trajectories;
    j["verdict"] = to_string(verdict);
    j["seed"] = seed;
    return j;
  }
};

// ---------------------------------------------------------------------------
// JSON helpers

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const PidGains& g) { return Json{{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}}; }

inline Json to_json(const EigenTriple& t) {
  return Json{{"lambda1", t.lambda1}, {"lambda2", t.lambda2}, {"lambda3", t.lambda3}};
}

inline Json to_json(const RegionReport& r) {
  Json j;
  j["member"] = r.member;
  j["triple"] = to_json(r.triple);
  Json roots = Json::array();
  for (const auto& z : r.roots) roots.push_back(to_json(z));
  j["roots"] = roots;
  j["phi"] = r.phi_value;
  j["h"] = r.h_value;
  j["product_L_phi_h"] = r.product_L_phi_h;
  Json reasons = Json::array();
  for (auto f : r.failure_reasons) reasons.push_back(to_string(f));
  j["failure_reasons"] = reasons;
  return j;
}

inline Json to_json(const Outcome& o) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        Json j;
        if constexpr (std::is_same_v<T, Converged>) {
          j["kind"] = "Converged";
          j["final_error"] = v.final_error;
        } else if constexpr (std::is_same_v<T, FiniteEscape>) {
          j["kind"] = "FiniteEscape";
          j["t_escape"] = v.t_escape;
          j["bracket"] = Json::array({v.lower, v.upper});
        } else if constexpr (std::is_same_v<T, MaxTimeReached>) {
          j["kind"] = "MaxTimeReached";
          j["final_error"] = v.final_error;
        } else {
          j["kind"] = "Diverged";
          j["t_threshold"] = v.t_threshold;
        }
        return j;
      },
      o);
}

/// Rows of "dotted.key,value" for the scalar leaves of a JSON tree.
inline void write_flat_csv(std::ostream& os, const Json& j, const std::string& prefix = "") {
  if (prefix.empty()) os << "key,value\n";
  if (j.is_object() || j.is_array()) {
    std::size_t idx = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++idx) {
      const std::string key = j.is_object() ? it.key() : std::to_string(idx);
      write_flat_csv(os, *it, prefix.empty() ? key : prefix + "." + key);
    }
    return;
  }
  os << prefix << ',';
  if (j.is_number_float()) {
    os << io::format_double(j.get<double>());
  } else if (j.is_string()) {
    os << j.get<std::string>();
  } else {
    os << j.dump();
  }
  os << '\n';
}

inline Json trajectory_json(const Trajectory& traj, const std::vector<std::string>& names,
                            const std::vector<io::ExtraColumn>& extras = {}) {
  Json columns = Json::array({"t"});
  for (const auto& n : names) columns.push_back(n);
  for (const auto& e : extras) columns.push_back(e.name);
  Json rows = Json::array();
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    Json row = Json::array({traj.times[k]});
    const Vec& s = traj.states[k];
    for (Eigen::Index i = 0; i < s.size(); ++i) row.push_back(s(i));
    for (const auto& e : extras) row.push_back(e.value(traj.times[k], s));
    rows.push_back(row);
  }
  return Json{{"columns", columns}, {"rows", rows}};
}

inline void attach_flat_csv(RunReport& report) {
  report.csv = [j = report.results](std::ostream& os) { write_flat_csv(os, j); };
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthesizeOptions {
  double L = 1.0;
  std::string mode = "corollary";
  std::optional<double> epsilon;
  std::optional<double> a;
  std::uint64_t seed = 0;
};

inline RunReport cmd_synthesize(const SynthesizeOptions& opt) {
  const LipschitzBound L(opt.L);
  RunReport report;
  report.command = "synthesize";
  report.seed = opt.seed;
  report.inputs = Json{{"L", opt.L}, {"mode", opt.mode}};

  EigenTriple triple;
  PidGains gains;
  if (opt.mode == "corollary") {
    const double eps = opt.epsilon.value_or(0.1);
    const double a = opt.a.value_or(1.02 * std::max(5.0 * opt.L, 5.0));
    report.inputs["epsilon"] = eps;
    report.inputs["a"] = a;
    gains = corollary_gains(eps, a, L);
    triple = corollary_triple(eps, a);
  } else if (opt.mode == "search") {
    triple = sample_omega_lambda(L, opt.seed);
    gains = lambda_to_gains(triple);
  } else {
    throw Error(ErrorCode::BadParams, "mode must be 'corollary' or 'search'");
  }

  const RegionReport region = in_omega_lambda(triple, L);
  const RegionReport gain_region = in_omega_k(gains, L);
  report.results["gains"] = to_json(gains);
  report.results["triple"] = to_json(triple);
  report.results["phi"] = region.phi_value;
  report.results["h"] = region.h_value;
  report.results["product_L_phi_h"] = region.product_L_phi_h;
  report.results["lyapunov_margin"] = vdot_margin(triple, L);
  report.results["member"] = region.member;
  report.results["gain_space_member"] = gain_region.member;
  report.verdict = region.member && gain_region.member ? Verdict::Pass : Verdict::Fail;
  attach_flat_csv(report);
  return report;
}

// ---------------------------------------------------------------------------
// check

struct CheckOptions {
  PidGains gains;
  double L = 1.0;
};

inline RunReport cmd_check(const CheckOptions& opt) {
  const LipschitzBound L(opt.L);
  RunReport report;
  report.command = "check";
  report.inputs = Json{{"gains", to_json(opt.gains)}, {"L", opt.L}};
  const RegionReport region = in_omega_k(opt.gains, L);
  report.results = to_json(region);
  if (region.member) report.results["lyapunov_margin"] = vdot_margin(region.triple, L);
  report.verdict = region.member ? Verdict::Pass : Verdict::Fail;
  attach_flat_csv(report);
  return report;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string plant = "zero";
  PlantParams params;
  std::optional<PidGains> gains;  // defaults to corollary gains for the plant's L
  std::vector<double> setpoint;   // empty: origin
  std::vector<double> x1_0;       // empty: origin
  std::vector<double> x2_0;       // empty: origin
  IntegratorConfig integrator = theorem1_integrator_config(400.0);
};

inline Vec vector_arg(const std::vector<double>& v, int n, const char* name) {
  if (v.empty()) return Vec::Zero(n);
  if (v.size() == 1) return Vec::Constant(n, v.front());
  if (static_cast<int>(v.size()) != n) {
    throw Error(ErrorCode::BadParams, std::string(name) + " needs 1 or " + std::to_string(n) + " entries");
  }
  return Eigen::Map<const Vec>(v.data(), n);
}

inline RunReport cmd_simulate(const SimulateOptions& opt) {
  PlantFunction plant = catalog_lookup(opt.plant, opt.params);
  if (!plant.globally_lipschitz()) {
    throw Error(ErrorCode::BadParams, "plant '" + opt.plant +
                                          "' is not globally Lipschitz; use demo-escape for superlinear growth");
  }
  const int n = plant.dim_n;
  const double plant_L = *plant.declared_L;
  const LipschitzBound L(plant_L);
  const PidGains gains = opt.gains ? *opt.gains : corollary_gains(0.1, 1.02 * std::max(5.0 * plant_L, 5.0), L);
  const Vec setpoint = vector_arg(opt.setpoint, n, "setpoint");
  const Vec x1 = vector_arg(opt.x1_0, n, "x1");
  const Vec x2 = vector_arg(opt.x2_0, n, "x2");

  RunReport report;
  report.command = "simulate";
  Json params = Json::object();
  for (const auto& [k, v] : opt.params) params[k] = v;
  report.inputs = Json{{"plant", opt.plant},   {"params", params},      {"gains", to_json(gains)},
                       {"setpoint", to_json(setpoint)}, {"x1", to_json(x1)}, {"x2", to_json(x2)},
                       {"method", opt.integrator.method == Method::Rk4Fixed ? "rk4" : "rk45"},
                       {"step", opt.integrator.step},   {"t_max", opt.integrator.t_max},
                       {"rel_tol", opt.integrator.rel_tol}, {"abs_tol", opt.integrator.abs_tol}};

  auto loop = std::make_shared<SecondOrderLoop>(std::move(plant), gains, setpoint);
  IntegratorConfig cfg = opt.integrator;
  std::optional<Vec> equilibrium;
  if (gains.ki != 0.0) equilibrium = loop->equilibrium();
  cfg.equilibrium = equilibrium;
  const Vec y0 = initial_state_from_physical(x1, x2, setpoint);
  const Trajectory traj = integrate([loop](const Vec& y) { return loop->field(y); }, y0, cfg);

  const RegionReport region = in_omega_k(gains, L);
  std::vector<io::ExtraColumn> extras;
  extras.push_back({"err_norm", [setpoint, n](double, const Vec& s) { return (s.segment(n, n) - setpoint).norm(); }});
  if (region.member) {
    auto tf = std::make_shared<ModalTransform>(build_modal_transform(region.triple, n));
    extras.push_back({"V", [loop, tf](double, const Vec& s) {
                        return lyapunov_value(tf->to_modal(proof_coordinates(*loop, s)), tf->lam);
                      }});
  }

  report.results["plant_L"] = plant_L;
  report.results["member"] = region.member;
  report.results["outcome"] = to_json(traj.outcome);
  report.results["final_time"] = traj.final_time();
  report.results["final_error"] = (traj.final_state().segment(n, n) - setpoint).norm();
  report.results["initial_error"] = (x1 - setpoint).norm();
  std::optional<double> rate;
  if (equilibrium) {
    try {
      rate = exponential_rate_fit(traj, *equilibrium);
    } catch (const Error&) {
    }
  }
  report.results["rate"] = rate ? Json(*rate) : Json(nullptr);
  report.results["steps_accepted"] = traj.steps_accepted;
  report.results["steps_rejected"] = traj.steps_rejected;
  report.results["stiffness_suspected"] = traj.stiffness_suspected;
  const auto names = io::second_order_state_names(n);
  report.results["trajectory"] = trajectory_json(traj, names, extras);
  report.verdict = traj.is<Converged>() ? Verdict::Pass : Verdict::Fail;
  report.csv = [traj, names, extras](std::ostream& os) { io::write_trajectory_csv(os, traj, names, extras); };
  return report;
}

// ---------------------------------------------------------------------------
// verify-theorem1

inline RunReport cmd_verify_theorem1(const Theorem1Options& opt) {
  RunReport report;
  report.command = "verify-theorem1";
  report.seed = opt.seed;
  report.inputs = Json{{"L", opt.L}, {"trials", opt.trials}, {"n", opt.n}, {"t_max", opt.t_max}};
  if (opt.gains) report.inputs["gains"] = to_json(*opt.gains);
  if (opt.plant) report.inputs["plant"] = opt.plant->label;

  const Theorem1Result r = verify_theorem1(opt);
  report.results["gains"] = to_json(r.gains);
  report.results["region"] = to_json(r.region);
  if (r.certificate) report.results["lyapunov_margin"] = r.certificate->margin;
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    Json j;
    j["plant"] = t.plant_label;
    j["plant_L"] = t.plant_L;
    j["setpoint"] = to_json(t.setpoint);
    j["initial_state"] = to_json(t.initial_state);
    j["outcome"] = t.outcome;
    j["final_error"] = t.final_error;
    j["rate"] = t.rate ? Json(*t.rate) : Json(nullptr);
    j["lyapunov_non_increasing"] = t.lyapunov.non_increasing;
    j["lyapunov_bound_holds"] = t.lyapunov.bound_holds;
    j["lyapunov_worst_increase"] = t.lyapunov.worst_increase;
    j["lyapunov_worst_bound_excess"] = t.lyapunov.worst_bound_excess;
    if (!t.error.empty()) j["error"] = t.error;
    j["passed"] = t.passed(opt.final_error_tol);
    trials.push_back(j);
  }
  report.results["trials"] = trials;
  report.results["passed"] = r.passed;
  if (!r.in_region()) {
    report.verdict = Verdict::Inconclusive;
  } else {
    report.verdict = r.passed == opt.trials ? Verdict::Pass : Verdict::Fail;
  }
  report.csv = [trials](std::ostream& os) {
    os << "trial,plant,outcome,final_error,rate,lyapunov_ok,passed\n";
    for (std::size_t k = 0; k < trials.size(); ++k) {
      const auto& t = trials[k];
      os << k << ',' << t["plant"].get<std::string>() << ',' << t["outcome"].get<std::string>() << ','
         << io::format_double(t["final_error"].is_null() ? NAN : t["final_error"].get<double>()) << ','
         << io::format_double(t["rate"].is_null() ? NAN : t["rate"].get<double>()) << ','
         << (t["lyapunov_non_increasing"].get<bool>() && t["lyapunov_bound_holds"].get<bool>()) << ','
         << t["passed"].get<bool>() << '\n';
    }
  };
  return report;
}

// ---------------------------------------------------------------------------
// demo-escape

struct EscapeOptions {
  double epsilon = 1.0;
  PidGains gains{-1.0, -1.0, -1.0};
  double setpoint = 0.0;
};

inline RunReport cmd_demo_escape(const EscapeOptions& opt) {
  RunReport report;
  report.command = "demo-escape";
  report.inputs = Json{{"epsilon", opt.epsilon}, {"gains", to_json(opt.gains)}, {"setpoint", opt.setpoint}};
  const EscapeDemoResult r = run_escape_demo(opt.epsilon, opt.gains, opt.setpoint);
  report.results["L_cone"] = r.L_cone;
  report.results["escape_time_bound"] = r.escape_bound;
  report.results["outcome"] = to_json(r.trajectory.outcome);
  report.results["cone_margins"] = Json{{"lower", r.margins.lower}, {"upper", r.margins.upper}};
  report.results["checks"] = Json{{"finite_escape", r.escaped},
                                  {"inside_cone", r.stays_in_cone},
                                  {"escape_within_bound", r.within_bound},
                                  {"error_envelope", r.error_envelope},
                                  {"comparison_envelope", r.comparison_envelope},
                                  {"divergence_envelope", r.divergence_envelope_holds},
                                  {"cone_inequalities", r.margins.hold()}};
  report.results["min_error_margin"] = r.min_error_margin;
  report.results["min_comparison_margin"] = r.min_comparison_margin;
  const std::vector<std::string> names{"y0", "y1", "y2"};
  report.results["trajectory"] = trajectory_json(r.trajectory, names);
  report.verdict = r.passed() && r.margins.hold() ? Verdict::Pass : Verdict::Fail;
  report.csv = [traj = r.trajectory, names](std::ostream& os) { io::write_trajectory_csv(os, traj, names); };
  return report;
}

// ---------------------------------------------------------------------------
// demo-third-order

struct ThirdOrderOptions {
  PidGains gains{-11.0, -6.0, -6.0};
  double L = 1.0;
};

inline RunReport cmd_demo_third_order(const ThirdOrderOptions& opt) {
  RunReport report;
  report.command = "demo-third-order";
  report.inputs = Json{{"gains", to_json(opt.gains)}, {"L", opt.L}};
  const ThirdOrderDemoResult r = run_third_order_demo(opt.gains, LipschitzBound(opt.L));
  report.results["c"] = r.c;
  report.results["reduced"] = r.spectrum.reduced;
  Json eig = Json::array();
  for (const auto& z : r.spectrum.eigenvalues) eig.push_back(to_json(z));
  report.results["eigenvalues"] = eig;
  report.results["real_part_sum"] = r.spectrum.real_part_sum;
  report.results["max_real_part"] = r.spectrum.max_real_part;
  report.results["R_residuals"] = r.R_residuals;
  report.results["initial_state"] = to_json(r.start.y0);
  report.results["initial_state_kind"] = r.start.kind == InitialStateKind::Real           ? "real"
                                         : r.start.kind == InitialStateKind::RealPart     ? "real_part"
                                                                                          : "imaginary_part";
  report.results["outcome"] = to_json(r.trajectory.outcome);
  report.results["worst_closed_form_error"] = r.worst_closed_form_error;
  report.results["closed_form_samples"] = r.closed_form_samples;
  report.results["checks"] = Json{{"diverged", r.diverged},
                                  {"closed_form_agrees", r.closed_form_agrees},
                                  {"trace_identity", r.trace_identity},
                                  {"unstable_mode", r.unstable_mode},
                                  {"R_clear", r.R_clear}};
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < r.start.y0.size(); ++i) names.push_back("y" + std::to_string(i));
  std::vector<io::ExtraColumn> extras{{"closed_form", [start = r.start](double t, const Vec&) {
                                         return start.closed_form(t);
                                       }}};
  report.results["trajectory"] = trajectory_json(r.trajectory, names, extras);
  report.verdict = r.passed() ? Verdict::Pass : Verdict::Fail;
  report.csv = [traj = r.trajectory, names, extras](std::ostream& os) {
    io::write_trajectory_csv(os, traj, names, extras);
  };
  return report;
}

}  // namespace pidcap::cli
