// Copyright 2026 The mala-lab Authors
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
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mala/experiment/config.hpp"
#include "mala/experiment/rational.hpp"
#include "mala/experiment/seed.hpp"

namespace mala::experiment {

/// One long-format result: a metric for one (cell, replica) with the full
/// config echo, so a row alone is enough to re-run its cell.
struct ResultRow {
  std::string experiment;
  std::uint64_t n = 0;
  Rational gamma;
  double ell = 0.0;
  std::string target_kind;
  double kappa = 0.0;
  double s = 0.0;
  double a = 0.0;
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::optional<double> stderr_value;
  std::optional<double> wall_ms;
};

inline constexpr std::string_view kCsvHeader =
    "experiment,N,gamma,ell,target_kind,kappa,s,a,replica,seed,metric,value,stderr,wall_ms";

inline std::string csv_line(const ResultRow& r) {
  std::string line;
  line.reserve(128);
  const auto add = [&line](std::string_view v) {
    line += v;
    line += ',';
  };
  add(r.experiment);
  add(std::to_string(r.n));
  add(r.gamma.to_string());
  add(format_double(r.ell));
  add(r.target_kind);
  add(format_double(r.kappa));
  add(format_double(r.s));
  add(format_double(r.a));
  add(std::to_string(r.replica));
  add(std::to_string(r.seed));
  add(r.metric);
  add(format_double(r.value));
  add(r.stderr_value ? format_double(*r.stderr_value) : std::string());
  line += r.wall_ms ? format_double(*r.wall_ms) : std::string();
  return line;
}

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << csv_line(r) << '\n';
}

}  // namespace mala::experiment
