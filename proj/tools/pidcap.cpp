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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pidcap/pidcap.hpp"

namespace {

using pidcap::cli::Json;

/// JSON configuration file: top-level keys are common flags, nested objects
/// are keyed by subcommand and hold that subcommand's flags.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    const Json j = Json::parse(in);
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return pidcap::io::format_double(v.get<double>());
    return v.dump();
  }

  static void collect(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto next = parents;
        next.push_back(it.key());
        collect(*it, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
  }
};

struct GainFlags {
  std::optional<double> kp, ki, kd;

  void add(CLI::App* app) {
    app->add_option("--kp", kp, "proportional gain");
    app->add_option("--ki", ki, "integral gain");
    app->add_option("--kd", kd, "derivative gain");
  }

  std::optional<pidcap::PidGains> get() const {
    const int given = kp.has_value() + ki.has_value() + kd.has_value();
    if (given == 0) return std::nullopt;
    if (given != 3) throw pidcap::Error(pidcap::ErrorCode::BadParams, "--kp, --ki and --kd must be given together");
    return pidcap::PidGains{*kp, *ki, *kd};
  }

  pidcap::PidGains require() const {
    auto g = get();
    if (!g) throw pidcap::Error(pidcap::ErrorCode::BadParams, "--kp, --ki and --kd are required");
    return *g;
  }
};

pidcap::PlantParams parse_params(const std::vector<std::string>& raw) {
  pidcap::PlantParams params;
  for (const auto& kv : raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw pidcap::Error(pidcap::ErrorCode::BadParams, "plant parameter '" + kv + "' is not key=value");
    }
    const std::string value = kv.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) {
      throw pidcap::Error(pidcap::ErrorCode::BadParams, "plant parameter '" + kv + "' has a non-numeric value");
    }
    params[kv.substr(0, eq)] = v;
  }
  return params;
}

pidcap::Method parse_method(const std::string& name) {
  return name == "rk4" ? pidcap::Method::Rk4Fixed : pidcap::Method::Rk45Adaptive;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PID regulation of uncertain nonlinear second-order systems: synthesis, checking and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file mirroring the flag names");

  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "write the output to this file");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}));

  // synthesize
  pidcap::cli::SynthesizeOptions syn;
  auto* synthesize = app.add_subcommand("synthesize", "pick gains from the sufficient stabilizing region");
  synthesize->add_option("--L", syn.L, "Lipschitz bound of the plant");
  synthesize->add_option("--mode", syn.mode, "corollary or search")->check(CLI::IsMember({"corollary", "search"}));
  synthesize->add_option("--epsilon", syn.epsilon, "corollary parameter in (0, 1/4)");
  synthesize->add_option("--a", syn.a, "corollary parameter above max(5L, 5)");

  // check
  GainFlags check_gains;
  double check_L = 1.0;
  auto* check = app.add_subcommand("check", "test gains for membership in the stabilizing region");
  check_gains.add(check);
  check->add_option("--L", check_L, "Lipschitz bound of the plant");

  // simulate
  pidcap::cli::SimulateOptions sim;
  GainFlags sim_gains;
  std::vector<std::string> sim_params;
  std::string sim_method = "rk45";
  auto* simulate = app.add_subcommand("simulate", "integrate the closed loop for a catalog plant");
  simulate->add_option("--plant", sim.plant, "catalog plant name");
  simulate->add_option("--param", sim_params, "plant parameter key=value (repeatable)");
  sim_gains.add(simulate);
  simulate->add_option("--setpoint", sim.setpoint, "setpoint y* (1 or n values)")->delimiter(',');
  simulate->add_option("--x1", sim.x1_0, "initial position (1 or n values)")->delimiter(',');
  simulate->add_option("--x2", sim.x2_0, "initial velocity (1 or n values)")->delimiter(',');
  simulate->add_option("--method", sim_method, "rk4 or rk45")->check(CLI::IsMember({"rk4", "rk45"}));
  simulate->add_option("--step", sim.integrator.step, "fixed step or initial step");
  simulate->add_option("--t-max", sim.integrator.t_max, "simulated time horizon");
  simulate->add_option("--rel-tol", sim.integrator.rel_tol, "adaptive relative tolerance");
  simulate->add_option("--abs-tol", sim.integrator.abs_tol, "adaptive absolute tolerance");
  simulate->add_option("--max-step", sim.integrator.max_step, "largest adaptive step");
  simulate->add_option("--stride", sim.integrator.record_stride, "record every k-th accepted step");

  // verify-theorem1
  pidcap::Theorem1Options thm;
  GainFlags thm_gains;
  std::string thm_plant;
  std::vector<std::string> thm_params;
  auto* verify = app.add_subcommand("verify-theorem1", "simulate random Lipschitz plants under region gains");
  verify->add_option("--L", thm.L, "Lipschitz bound");
  verify->add_option("--trials", thm.trials, "number of random plants and initial states")->check(CLI::PositiveNumber);
  verify->add_option("--n", thm.n, "state dimension")->check(CLI::PositiveNumber);
  verify->add_option("--epsilon", thm.epsilon, "corollary parameter");
  verify->add_option("--a", thm.a, "corollary parameter");
  thm_gains.add(verify);
  verify->add_option("--plant", thm_plant, "fixed catalog plant instead of random draws");
  verify->add_option("--param", thm_params, "plant parameter key=value (repeatable)");
  verify->add_option("--t-max", thm.t_max, "simulated time horizon");
  verify->add_option("--threads", thm.threads, "worker threads (0: hardware concurrency)");

  // demo-escape
  pidcap::cli::EscapeOptions esc;
  GainFlags esc_gains;
  auto* escape = app.add_subcommand("demo-escape", "finite escape under superlinear plant growth");
  escape->add_option("--epsilon", esc.epsilon, "growth exponent excess, > 0");
  esc_gains.add(escape);
  escape->add_option("--setpoint", esc.setpoint, "setpoint y*");

  // demo-third-order
  pidcap::cli::ThirdOrderOptions third;
  GainFlags third_gains;
  auto* third_order = app.add_subcommand("demo-third-order", "unbounded error for a third-order plant");
  third_gains.add(third_order);
  third_order->add_option("--L", third.L, "Lipschitz bound");

  for (auto* sub : {synthesize, check, simulate, verify, escape, third_order}) sub->configurable();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pidcap::cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pidcap::cli::kExitUsage;
  }

  try {
    pidcap::cli::RunReport report;
    if (*synthesize) {
      syn.seed = seed;
      report = pidcap::cli::cmd_synthesize(syn);
    } else if (*check) {
      report = pidcap::cli::cmd_check({check_gains.require(), check_L});
    } else if (*simulate) {
      sim.params = parse_params(sim_params);
      sim.gains = sim_gains.get();
      sim.integrator.method = parse_method(sim_method);
      report = pidcap::cli::cmd_simulate(sim);
      report.seed = seed;
    } else if (*verify) {
      thm.seed = seed;
      thm.gains = thm_gains.get();
      if (!thm_plant.empty()) thm.plant = pidcap::catalog_lookup(thm_plant, parse_params(thm_params));
      report = pidcap::cli::cmd_verify_theorem1(thm);
    } else if (*escape) {
      if (auto g = esc_gains.get()) esc.gains = *g;
      report = pidcap::cli::cmd_demo_escape(esc);
      report.seed = seed;
    } else if (*third_order) {
      if (auto g = third_gains.get()) third.gains = *g;
      report = pidcap::cli::cmd_demo_third_order(third);
      report.seed = seed;
    }

    const bool csv = format == "csv";
    if (csv && !out.empty()) report.trajectories.push_back(out);
    auto payload = [&](std::ostream& os) {
      if (csv) {
        report.csv(os);
      } else {
        os << report.to_json().dump(2) << '\n';
      }
    };
    if (out.empty()) {
      payload(std::cout);
    } else {
      pidcap::io::write_file(out, payload);
      std::cout << report.command << ": " << pidcap::cli::to_string(report.verdict) << " (" << out << ")\n";
    }
    return pidcap::cli::exit_code(report.verdict);
  } catch (const pidcap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pidcap::cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pidcap::cli::kExitUsage;
  }
}
