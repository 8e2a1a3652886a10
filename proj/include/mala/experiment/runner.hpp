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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mala/chain_diagnostics.hpp"
#include "mala/experiment/config.hpp"
#include "mala/experiment/csv.hpp"
#include "mala/experiment/seed.hpp"
#include "mala/limit_process.hpp"
#include "mala/proposal_kernels.hpp"
#include "mala/random.hpp"
#include "mala/statistics.hpp"
#include "mala/target_measure.hpp"

#ifndef MALA_VERSION
#define MALA_VERSION "0.0.0"
#endif

namespace mala::experiment {

inline constexpr std::string_view kSoftwareVersion = MALA_VERSION;

struct RunOptions {
  std::size_t workers = 1;
  // Fill the CSV wall_ms column. Off by default: timings are not
  // reproducible and would break byte-identical outputs.
  bool record_wall_time = false;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> master_seed;
};

/// One (N, gamma, ell, replica) unit of work.
struct Cell {
  std::uint64_t n = 0;
  Rational gamma;
  double ell = 0.0;
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
};

struct CellOutcome {
  Cell cell;
  std::vector<ResultRow> rows;
  double wall_ms = 0.0;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<CellOutcome> cells;
  std::vector<ResultRow> rows;  // all rows in canonical order
  [[nodiscard]] std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.error.has_value(); }));
  }
};

struct RunSummary {
  std::filesystem::path csv_path;
  std::filesystem::path manifest_path;
  std::size_t rows = 0;
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::optional<std::string> io_error;
};

inline std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (auto n : cfg.n_grid) {
    for (const auto& g : cfg.gamma_grid) {
      for (double ell : cfg.ell_grid) {
        for (std::uint64_t r = 0; r < cfg.replicas; ++r) {
          cells.push_back({n, g, ell, r, seed_for(cfg.master_seed, n, g, ell, r)});
        }
      }
    }
  }
  return cells;
}

namespace detail {

class RowSink {
 public:
  RowSink(const ExperimentConfig& cfg, const Cell& cell) : cfg_(cfg), cell_(cell) {}

  void add(std::string metric, double value, std::optional<double> se = std::nullopt) {
    ResultRow r;
    r.experiment = std::string(to_string(cfg_.experiment));
    r.n = cell_.n;
    r.gamma = cell_.gamma;
    r.ell = cell_.ell;
    r.target_kind = std::string(to_string(cfg_.target.psi_kind));
    r.kappa = cfg_.target.kappa;
    r.s = cfg_.target.s;
    r.a = cfg_.target.a;
    r.replica = cell_.replica;
    r.seed = cell_.seed;
    r.metric = std::move(metric);
    r.value = value;
    r.stderr_value = se;
    rows.push_back(std::move(r));
  }

  std::vector<ResultRow> rows;

 private:
  const ExperimentConfig& cfg_;
  const Cell& cell_;
};

inline bool critical(const Rational& g) { return g == Rational(1, 3); }

// Limiting acceptance of the preconditioned random walk at gamma = 1:
// Q ~ N(-ell, 2 ell), so alpha = 2 Phi(-sqrt(ell / 2)).
inline double rwm_limiting_alpha(double ell) { return 2.0 * normal_cdf(-std::sqrt(ell / 2.0)); }

inline RecordingPolicy policy_for(const ExperimentConfig& cfg, const TargetModel& model) {
  RecordingPolicy p;
  switch (cfg.recording) {
    case RecordingMode::kSummary: p = RecordingPolicy::summary(); break;
    case RecordingMode::kThinned: p = RecordingPolicy::thinned(cfg.thinning, 1); break;
    case RecordingMode::kFull: p = RecordingPolicy::thinned(cfg.thinning, 0); break;
  }
  p.jump_indices = {model.s().r, model.spectrum().kappa()};
  return p;
}

inline void chain_cell(const ExperimentConfig& cfg, const Cell& cell, RowSink& out) {
  const auto n = static_cast<std::size_t>(cell.n);
  const auto model = make_target(cfg.target, n);
  const auto kind = cfg.experiment == ExperimentKind::kRwmBaseline ? ProposalKind::kRwm : ProposalKind::kMala;
  const KernelParams p(n, cell.gamma.value(), cell.ell, kind);
  RandomStream rng(cell.seed);
  const auto start = stationary_start(model, p, rng, cfg.burn_in);
  const auto trace = run_chain(start.state, model, p, cfg.n_steps, rng, policy_for(cfg, model));

  std::vector<double> acc_prob(trace.q_values.size());
  std::transform(trace.q_values.begin(), trace.q_values.end(), acc_prob.begin(), acceptance_probability);
  out.add("acceptance_rate", trace.acceptance_rate(),
          stats::batch_means_standard_error(std::span<const std::uint8_t>(trace.accepted)));
  out.add("mean_acceptance_probability", trace.mean_acceptance_probability(),
          stats::batch_means_standard_error(std::span<const double>(acc_prob)));
  out.add("mean_q", trace.mean_q(), stats::batch_means_standard_error(std::span<const double>(trace.q_values)));
  const double esjd_s = esjd(trace, model.s());
  const double esjd_w = esjd(trace, SobolevIndex{model.spectrum().kappa()});
  out.add("esjd", esjd_s);
  out.add("esjd_whitened", esjd_w);
  // In the whitened norm every coordinate has unit variance, so
  // esjd_whitened ~ alpha * 2 delta * N and this ratio estimates ell * alpha.
  out.add("speed_empirical", esjd_w / (2.0 * p.dt() * static_cast<double>(n)));
  out.add("stationary_exact", start.exact ? 1.0 : 0.0);
  if (kind == ProposalKind::kMala && critical(cell.gamma)) {
    const double alpha = limiting_alpha(cell.ell);
    out.add("alpha_theory", alpha);
    out.add("speed_theory", cell.ell * alpha);
    out.add("esjd_theory", 2.0 * p.delta() * alpha * trace_sobolev(model.spectrum(), model.s(), n));
  }
  if (kind == ProposalKind::kRwm && cell.gamma == Rational(1, 1)) {
    const double alpha = rwm_limiting_alpha(cell.ell);
    out.add("alpha_theory", alpha);
    out.add("speed_theory", cell.ell * alpha);
  }
}

inline void q_decomposition_cell(const ExperimentConfig& cfg, const Cell& cell, RowSink& out) {
  const auto n = static_cast<std::size_t>(cell.n);
  const auto model = make_target(cfg.target, n);
  const KernelParams p(n, cell.gamma.value(), cell.ell);
  RandomStream rng(cell.seed);
  const bool decompose = critical(cell.gamma);
  const auto draws = static_cast<std::size_t>(cfg.n_steps);
  std::vector<double> q(draws), z, i_abs, err_abs, acc(draws);
  // Non-Gaussian targets: successive states of a burnt-in chain stand in for
  // exact stationary draws.
  std::optional<ChainKernel> walker;
  if (!model.gaussian()) walker.emplace(model, p, stationary_start(model, p, rng, cfg.burn_in).state);
  for (std::size_t m = 0; m < draws; ++m) {
    SpectralField x;
    if (walker) {
      walker->step(rng);
      x = SpectralField(std::vector<double>(walker->state().begin(), walker->state().end()));
    } else {
      x = sample_target_exact(model, n, rng);
    }
    const auto prop = mala_propose(x, model, p, rng);
    q[m] = log_accept_ratio(x, prop.y, model, p);
    acc[m] = acceptance_probability(q[m]);
    if (decompose) {
      const auto d = decompose_q(x, prop.xi, q[m], p, model.spectrum());
      z.push_back(d.z_term);
      i_abs.push_back(std::abs(d.i_term));
      err_abs.push_back(std::abs(d.err_term));
    }
  }
  const auto span = [](const std::vector<double>& v) { return std::span<const double>(v); };
  out.add("q_mean", stats::mean(span(q)), stats::standard_error(span(q)));
  if (draws > 1) out.add("q_variance", stats::variance(span(q)));
  out.add("acceptance_mean", stats::mean(span(acc)), stats::standard_error(span(acc)));
  if (decompose) {
    const double l3 = cell.ell * cell.ell * cell.ell;
    out.add("q_mean_theory", -l3 / 4.0);
    out.add("q_variance_theory", l3 / 2.0);
    out.add("alpha_theory", limiting_alpha(cell.ell));
    out.add("z_mean", stats::mean(span(z)), stats::standard_error(span(z)));
    if (draws > 1) out.add("z_variance", stats::variance(span(z)));
    out.add("i_abs_mean", stats::mean(span(i_abs)), stats::standard_error(span(i_abs)));
    out.add("err_abs_mean", stats::mean(span(err_abs)), stats::standard_error(span(err_abs)));
  }
  for (double v : q) out.add("q_sample", v);
}

inline void diffusion_limit_cell(const ExperimentConfig& cfg, const Cell& cell, RowSink& out) {
  const auto n = static_cast<std::size_t>(cell.n);
  const auto model = make_target(cfg.target, n);
  const KernelParams p(n, cell.gamma.value(), cell.ell);
  RandomStream rng(cell.seed);
  const auto start = stationary_start(model, p, rng, cfg.burn_in);
  const auto trace = run_chain(start.state, model, p, cfg.n_steps, rng, RecordingPolicy::thinned(1, 1));
  const double horizon = trace_duration(trace);
  // Off-knot sampling grid: 2.5 chain steps per sample; the integrator runs
  // at dt/4 and keeps every 10th step, giving the same spacing.
  const double spacing = 2.5 * p.dt();
  const double h = speed(cell.ell);
  // Coordinate 1 of the limit is OU with rate h (1 + a lambda_1^2) for the
  // Gaussian kinds.
  const double theory = model.gaussian() ? h * (1.0 + (model.psi_vanishes() ? 0.0 : model.weight())) : h;
  const double max_lag = 3.0 / theory;
  const auto chain_path = interpolate_chain(trace, p, time_grid(horizon, spacing));
  const auto spde = euler_spde(start.state, model, h, horizon, p.dt() / 4.0, rng, {10, 1});
  out.add("chain_acf_rate", acf_rate_fit(chain_path, 1, max_lag));
  out.add("spde_acf_rate", acf_rate_fit(spde, 1, max_lag));
  if (model.gaussian()) out.add("theory_rate", theory);
  out.add("acceptance_rate", trace.acceptance_rate());
  out.add("horizon", horizon);
}

inline std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  RowSink sink(cfg, cell);
  switch (cfg.experiment) {
    case ExperimentKind::kQDecomposition: q_decomposition_cell(cfg, cell, sink); break;
    case ExperimentKind::kDiffusionLimit: diffusion_limit_cell(cfg, cell, sink); break;
    default: chain_cell(cfg, cell, sink); break;
  }
  return std::move(sink.rows);
}

// For ell sweeps: per (N, gamma, replica), the grid ell with the largest
// empirical speed and the acceptance observed there.
inline std::vector<ResultRow> optimum_rows(const ExperimentConfig& cfg, const std::vector<CellOutcome>& cells) {
  using Key = std::tuple<std::uint64_t, Rational, std::uint64_t>;
  std::map<Key, std::pair<const CellOutcome*, double>> best;
  std::vector<Key> order;
  for (const auto& c : cells) {
    if (c.error) continue;
    const auto it = std::find_if(c.rows.begin(), c.rows.end(),
                                 [](const ResultRow& r) { return r.metric == "speed_empirical"; });
    if (it == c.rows.end()) continue;
    const Key key{c.cell.n, c.cell.gamma, c.cell.replica};
    auto [pos, inserted] = best.try_emplace(key, &c, it->value);
    if (inserted) order.push_back(key);
    else if (it->value > pos->second.second) pos->second = {&c, it->value};
  }
  std::vector<ResultRow> rows;
  for (const auto& key : order) {
    const CellOutcome* c = best.at(key).first;
    RowSink sink(cfg, c->cell);
    sink.add("optimal_ell", c->cell.ell);
    for (const auto& r : c->rows) {
      if (r.metric == "acceptance_rate") sink.add("acceptance_at_optimum", r.value, r.stderr_value);
    }
    rows.insert(rows.end(), sink.rows.begin(), sink.rows.end());
  }
  return rows;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

/// Runs every cell on a pool of `workers` threads. Cells are independent and
/// results are merged in enumeration order, so the output does not depend on
/// the worker count. A failing cell is recorded and does not stop the sweep.
inline SweepResult execute_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  const auto cells = enumerate_cells(cfg);
  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      auto& o = outcomes[i];
      o.cell = cells[i];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        o.rows = detail::run_cell(cfg, cells[i]);
      } catch (const std::exception& e) {
        o.rows.clear();
        o.error = e.what();
      }
      o.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (opts.record_wall_time) {
        for (auto& r : o.rows) r.wall_ms = o.wall_ms;
      }
    }
  };
  const std::size_t k = std::max<std::size_t>(1, std::min(opts.workers, cells.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < k; ++t) pool.emplace_back(worker);
    worker();
  }
  SweepResult res;
  for (const auto& o : outcomes) res.rows.insert(res.rows.end(), o.rows.begin(), o.rows.end());
  if (cfg.experiment == ExperimentKind::kRwmBaseline || cfg.experiment == ExperimentKind::kEsjdSweep ||
      cfg.experiment == ExperimentKind::kEllCurve) {
    auto extra = detail::optimum_rows(cfg, outcomes);
    res.rows.insert(res.rows.end(), extra.begin(), extra.end());
  }
  res.cells = std::move(outcomes);
  return res;
}

/// Runs the sweep and writes <output_dir>/<experiment>.csv plus
/// <output_dir>/manifest.json. The manifest is written even when the CSV
/// cannot be, and then records the I/O error.
inline RunSummary run_experiment(ExperimentConfig cfg, const RunOptions& opts = {}) {
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  if (opts.master_seed) cfg.master_seed = *opts.master_seed;
  const auto started = std::chrono::system_clock::now();
  const auto sweep = execute_sweep(cfg, opts);
  const auto finished = std::chrono::system_clock::now();

  RunSummary summary;
  const std::filesystem::path dir(cfg.output_dir);
  summary.csv_path = dir / (std::string(to_string(cfg.experiment)) + ".csv");
  summary.manifest_path = dir / "manifest.json";
  summary.rows = sweep.rows.size();
  summary.cells = sweep.cells.size();
  summary.failed_cells = sweep.failures();

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) summary.io_error = "cannot create output directory '" + dir.string() + "': " + ec.message();
  if (!summary.io_error) {
    std::ofstream csv(summary.csv_path, std::ios::binary | std::ios::trunc);
    if (csv) write_csv(csv, sweep.rows);
    csv.close();
    if (!csv) summary.io_error = "cannot write '" + summary.csv_path.string() + "'";
  }

  nlohmann::json m;
  m["software"] = "mala-lab";
  m["version"] = std::string(kSoftwareVersion);
  m["experiment"] = std::string(to_string(cfg.experiment));
  m["config_hash"] = config_hash(cfg);
  m["config"] = to_json(cfg);
  m["master_seed"] = cfg.master_seed;
  m["workers"] = opts.workers;
  m["started_at"] = detail::utc_timestamp(started);
  m["finished_at"] = detail::utc_timestamp(finished);
  m["csv"] = summary.csv_path.filename().string();
  m["rows"] = summary.rows;
  m["complete"] = !summary.io_error && summary.failed_cells == 0;
  if (summary.io_error) m["io_error"] = *summary.io_error;
  m["cells"] = nlohmann::json::array();
  for (const auto& c : sweep.cells) {
    nlohmann::json e;
    e["N"] = c.cell.n;
    e["gamma"] = c.cell.gamma.to_string();
    e["ell"] = c.cell.ell;
    e["replica"] = c.cell.replica;
    e["seed"] = c.cell.seed;
    e["status"] = c.error ? "failed" : "ok";
    if (c.error) e["error"] = *c.error;
    e["wall_ms"] = c.wall_ms;
    m["cells"].push_back(std::move(e));
  }
  std::ofstream mf(summary.manifest_path, std::ios::trunc);
  if (mf) mf << m.dump(2) << '\n';
  mf.close();
  if (!mf && !summary.io_error) summary.io_error = "cannot write '" + summary.manifest_path.string() + "'";
  return summary;
}

}  // namespace mala::experiment
