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

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pidcap/error.hpp"
#include "pidcap/integrator.hpp"

namespace pidcap::io {

/// Round-trip exact rendering: 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Optional extra column computed from (time, state).
struct ExtraColumn {
  std::string name;
  std::function<double(double, const Vec&)> value;
};

/// Header row then one row per recorded sample:
///   t, <state columns>, <extra columns>
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& state_names,
                                 const std::vector<ExtraColumn>& extras = {}) {
  os << "t";
  for (const auto& name : state_names) os << ',' << name;
  for (const auto& col : extras) os << ',' << col.name;
  os << '\n';
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << format_double(traj.times[i]);
    const Vec& s = traj.states[i];
    for (Eigen::Index k = 0; k < s.size(); ++k) os << ',' << format_double(s(k));
    for (const auto& col : extras) os << ',' << format_double(col.value(traj.times[i], s));
    os << '\n';
  }
}

/// Column names y0_1..y0_n, x1_1..x1_n, x2_1..x2_n of a second-order loop.
inline std::vector<std::string> second_order_state_names(int n) {
  std::vector<std::string> names;
  for (const char* block : {"y0_", "x1_", "x2_"}) {
    for (int i = 1; i <= n; ++i) names.push_back(block + std::to_string(i));
  }
  return names;
}

inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::BadParams, "cannot open '" + path + "' for writing");
  body(out);
  if (!out) throw Error(ErrorCode::BadParams, "failed writing '" + path + "'");
}

}  // namespace pidcap::io
