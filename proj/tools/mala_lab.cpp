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

// mala-lab: run, validate and inspect MALA scaling experiments.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mala/chain_diagnostics.hpp"
#include "mala/experiment/config.hpp"
#include "mala/experiment/runner.hpp"
#include "mala/experiment/seed.hpp"

namespace {

namespace ex = mala::experiment;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exit codes: 0 ok, 1 runtime or I/O failure, 2 invalid config, 3 some
// cells failed.
int report_config_error(const ex::ConfigError& e) {
  std::cerr << "invalid config:\n";
  for (const auto& p : e.problems()) std::cerr << "  - " << p << '\n';
  return 2;
}

int cmd_validate(const std::string& path) {
  try {
    const auto cfg = ex::parse_config(read_file(path));
    std::cout << "ok " << ex::config_hash(cfg) << '\n' << ex::canonical_form(cfg);
    return 0;
  } catch (const ex::ConfigError& e) {
    return report_config_error(e);
  }
}

int cmd_run(const std::string& path, const ex::RunOptions& opts) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::parse_config(read_file(path));
  } catch (const ex::ConfigError& e) {
    return report_config_error(e);
  }
  const auto summary = ex::run_experiment(cfg, opts);
  std::cerr << "cells: " << summary.cells << " (failed " << summary.failed_cells << "), rows: " << summary.rows
            << '\n'
            << "csv: " << summary.csv_path.string() << '\n'
            << "manifest: " << summary.manifest_path.string() << '\n';
  if (summary.io_error) {
    std::cerr << "error: " << *summary.io_error << '\n';
    return 1;
  }
  return summary.failed_cells == 0 ? 0 : 3;
}

int cmd_curve(double lo, double hi, std::size_t points) {
  const auto curve = mala::speed_and_optimum(mala::linspace(lo, hi, points));
  std::cout << "ell,alpha,speed,kind\n";
  for (std::size_t i = 0; i < curve.ells.size(); ++i) {
    std::cout << ex::format_double(curve.ells[i]) << ',' << ex::format_double(curve.alphas[i]) << ','
              << ex::format_double(curve.speeds[i]) << ",grid\n";
  }
  std::cout << ex::format_double(curve.ell_star) << ',' << ex::format_double(curve.alpha_star) << ','
            << ex::format_double(curve.speed_star) << ",optimum\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MALA optimal-scaling experiments on spectral truncations"};
  app.set_version_flag("--version", std::string(ex::kSoftwareVersion));
  app.require_subcommand(1);

  std::string config_path;
  ex::RunOptions opts;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run the sweep described by a config file");
  run->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", opts.workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--output-dir", output_dir, "Override output_dir from the config");
  run->add_option("--seed", seed, "Override master_seed from the config");
  run->add_flag("--timings", opts.record_wall_time, "Fill the wall_ms CSV column (makes output non-reproducible)");

  auto* validate = app.add_subcommand("validate", "Check a config file and print its canonical form");
  validate->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);

  double ell_min = 0.1;
  double ell_max = 4.0;
  std::size_t points = 40;
  auto* curve = app.add_subcommand("curve", "Print the limiting acceptance and speed curve as CSV");
  curve->add_option("--ell-min", ell_min, "Smallest step-size scale")->check(CLI::PositiveNumber);
  curve->add_option("--ell-max", ell_max, "Largest step-size scale")->check(CLI::PositiveNumber);
  curve->add_option("--points", points, "Grid points")->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      opts.output_dir = output_dir;
      opts.master_seed = seed;
      return cmd_run(config_path, opts);
    }
    if (*validate) return cmd_validate(config_path);
    if (*curve) {
      if (!(ell_max > ell_min) && points > 1) {
        std::cerr << "error: --ell-max must exceed --ell-min\n";
        return 2;
      }
      return cmd_curve(ell_min, ell_max, points);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
