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

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mala/experiment/rational.hpp"
#include "mala/experiment/seed.hpp"
#include "mala/proposal_kernels.hpp"
#include "mala/target_measure.hpp"

namespace mala::experiment {

enum class ExperimentKind {
  kAcceptanceSweep,
  kEllCurve,
  kGammaScaling,
  kQDecomposition,
  kDiffusionLimit,
  kEsjdSweep,
  kRwmBaseline,
};

inline constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kExperimentNames{{
    {ExperimentKind::kAcceptanceSweep, "acceptance-sweep"},
    {ExperimentKind::kEllCurve, "ell-curve"},
    {ExperimentKind::kGammaScaling, "gamma-scaling"},
    {ExperimentKind::kQDecomposition, "q-decomposition"},
    {ExperimentKind::kDiffusionLimit, "diffusion-limit"},
    {ExperimentKind::kEsjdSweep, "esjd-sweep"},
    {ExperimentKind::kRwmBaseline, "rwm-baseline"},
}};

inline std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kExperimentNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

enum class RecordingMode { kSummary, kThinned, kFull };

inline std::string_view to_string(RecordingMode m) {
  switch (m) {
    case RecordingMode::kSummary: return "summary";
    case RecordingMode::kThinned: return "thinned";
    case RecordingMode::kFull: return "full";
  }
  return "unknown";
}

struct TargetConfig {
  double kappa = 1.0;
  double s = 0.0;
  PsiKind psi_kind = PsiKind::kZero;
  double a = 1.0;
  friend bool operator==(const TargetConfig&, const TargetConfig&) = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kAcceptanceSweep;
  TargetConfig target;
  std::vector<std::uint64_t> n_grid;
  std::vector<Rational> gamma_grid;
  std::vector<double> ell_grid;
  std::uint64_t n_steps = 1;
  std::optional<std::uint64_t> burn_in;
  std::uint64_t thinning = 1;
  RecordingMode recording = RecordingMode::kSummary;
  std::uint64_t replicas = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = "results";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  [[nodiscard]] std::uint64_t max_n() const {
    std::uint64_t m = 1;
    for (auto n : n_grid) m = std::max(m, n);
    return m;
  }
};

/// Every problem found while parsing, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  [[nodiscard]] const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid experiment config:";
    for (const auto& m : p) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

inline std::optional<PsiKind> parse_psi_kind(std::string_view s) {
  for (auto k : {PsiKind::kZero, PsiKind::kQuadraticSobolev, PsiKind::kSmoothNonlinear}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace detail {

inline const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys{
      "experiment", "kappa",     "s",         "psi_kind", "a",           "N",         "gamma", "ell",
      "n_steps",    "burn_in",   "thinning",  "recording", "replicas",   "master_seed", "output_dir"};
  return keys;
}

class Reader {
 public:
  explicit Reader(const nlohmann::json& doc) : doc_(doc) {}

  std::vector<std::string> problems;

  template <typename T>
  std::optional<T> get(const char* key, bool required) {
    if (!doc_.contains(key)) {
      if (required) problems.push_back(std::string("missing required key '") + key + "'");
      return std::nullopt;
    }
    return convert<T>(key, doc_.at(key));
  }

  template <typename T>
  std::optional<T> convert(const std::string& what, const nlohmann::json& v) {
    if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
      problems.push_back("'" + what + "' must be a non-negative integer (got " + v.dump() + ")");
    } else if constexpr (std::is_same_v<T, double>) {
      if (v.is_number()) return v.get<double>();
      problems.push_back("'" + what + "' must be a number (got " + v.dump() + ")");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (v.is_string()) return v.get<std::string>();
      problems.push_back("'" + what + "' must be a string (got " + v.dump() + ")");
    } else if constexpr (std::is_same_v<T, Rational>) {
      std::optional<Rational> r;
      if (v.is_string()) r = Rational::parse(v.get<std::string>());
      if (v.is_number_integer()) r = Rational(v.get<std::int64_t>(), 1);
      if (r) return r;
      problems.push_back("'" + what + "' must be an exact rational string such as \"1/3\" (got " +
                         v.dump() + ")");
    }
    return std::nullopt;
  }

  template <typename T>
  std::vector<T> list(const char* key) {
    std::vector<T> out;
    if (!doc_.contains(key)) {
      problems.push_back(std::string("missing required key '") + key + "'");
      return out;
    }
    const auto& v = doc_.at(key);
    if (!v.is_array()) {
      if (auto x = convert<T>(key, v)) out.push_back(*x);
      return out;
    }
    if (v.empty()) problems.push_back(std::string("grid '") + key + "' must be non-empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (auto x = convert<T>(std::string(key) + "[" + std::to_string(i) + "]", v[i])) out.push_back(*x);
    }
    return out;
  }

 private:
  const nlohmann::json& doc_;
};

}  // namespace detail

/// Parses and validates a flat JSON experiment document. Unknown keys and
/// constraint violations are all collected into one ConfigError.
inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object of key/value pairs"});

  detail::Reader rd(doc);
  for (const auto& [key, value] : doc.items()) {
    if (!detail::known_keys().contains(key)) rd.problems.push_back("unknown key '" + key + "'");
    if (value.is_object()) rd.problems.push_back("key '" + key + "' must not be a nested object");
  }

  ExperimentConfig cfg;
  if (auto e = rd.get<std::string>("experiment", true)) {
    bool found = false;
    for (const auto& [kind, name] : kExperimentNames) {
      if (name == *e) {
        cfg.experiment = kind;
        found = true;
      }
    }
    if (!found) rd.problems.push_back("unknown experiment '" + *e + "'");
  }
  if (auto v = rd.get<double>("kappa", false)) cfg.target.kappa = *v;
  if (auto v = rd.get<double>("s", false)) cfg.target.s = *v;
  if (auto v = rd.get<double>("a", false)) cfg.target.a = *v;
  if (auto v = rd.get<std::string>("psi_kind", false)) {
    if (auto k = parse_psi_kind(*v)) {
      cfg.target.psi_kind = *k;
    } else {
      rd.problems.push_back("psi_kind must be one of zero, quadratic-sobolev, smooth-nonlinear (got '" +
                            *v + "')");
    }
  }
  cfg.n_grid = rd.list<std::uint64_t>("N");
  cfg.gamma_grid = rd.list<Rational>("gamma");
  cfg.ell_grid = rd.list<double>("ell");
  if (auto v = rd.get<std::uint64_t>("n_steps", true)) cfg.n_steps = *v;
  if (doc.contains("burn_in") && !doc.at("burn_in").is_null()) {
    cfg.burn_in = rd.convert<std::uint64_t>("burn_in", doc.at("burn_in"));
  }
  if (auto v = rd.get<std::uint64_t>("thinning", false)) cfg.thinning = *v;
  if (auto v = rd.get<std::string>("recording", false)) {
    if (*v == "summary") cfg.recording = RecordingMode::kSummary;
    else if (*v == "thinned") cfg.recording = RecordingMode::kThinned;
    else if (*v == "full") cfg.recording = RecordingMode::kFull;
    else rd.problems.push_back("recording must be one of summary, thinned, full (got '" + *v + "')");
  }
  if (auto v = rd.get<std::uint64_t>("replicas", false)) cfg.replicas = *v;
  if (auto v = rd.get<std::uint64_t>("master_seed", false)) cfg.master_seed = *v;
  if (auto v = rd.get<std::string>("output_dir", false)) cfg.output_dir = *v;

  auto& p = rd.problems;
  const auto num = [](double v) { return format_double(v); };
  if (!(cfg.target.kappa > 0.5) || !std::isfinite(cfg.target.kappa)) {
    p.push_back("kappa must satisfy κ > 1/2 (got " + num(cfg.target.kappa) + ")");
  }
  if (!(cfg.target.s >= 0.0) || !(cfg.target.s < cfg.target.kappa - 0.5)) {
    p.push_back("s must satisfy 0 <= s < κ - 1/2 (got s = " + num(cfg.target.s) +
                ", κ = " + num(cfg.target.kappa) + ")");
  }
  if (!(cfg.target.a >= 0.0) || !std::isfinite(cfg.target.a)) {
    p.push_back("a must be >= 0 (got " + num(cfg.target.a) + ")");
  }
  for (auto n : cfg.n_grid) {
    if (n < 1) p.push_back("N entries must be >= 1 (got 0)");
  }
  for (const auto& g : cfg.gamma_grid) {
    if (!(g.value() > 0.0 && g.value() <= 1.0)) p.push_back("gamma must lie in (0, 1] (got " + g.to_string() + ")");
  }
  for (double e : cfg.ell_grid) {
    if (!(e > 0.0) || !std::isfinite(e)) p.push_back("ell must be > 0 (got " + num(e) + ")");
  }
  if (cfg.n_steps < 1) p.push_back("n_steps must be >= 1");
  if (cfg.thinning < 1) p.push_back("thinning must be >= 1");
  if (cfg.replicas < 1) p.push_back("replicas must be >= 1");
  if (!p.empty()) throw ConfigError(std::move(p));
  return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = std::string(to_string(cfg.experiment));
  j["kappa"] = cfg.target.kappa;
  j["s"] = cfg.target.s;
  j["psi_kind"] = std::string(to_string(cfg.target.psi_kind));
  j["a"] = cfg.target.a;
  j["N"] = cfg.n_grid;
  j["gamma"] = nlohmann::json::array();
  for (const auto& g : cfg.gamma_grid) j["gamma"].push_back(g.to_string());
  j["ell"] = cfg.ell_grid;
  j["n_steps"] = cfg.n_steps;
  j["burn_in"] = cfg.burn_in ? nlohmann::json(*cfg.burn_in) : nlohmann::json(nullptr);
  j["thinning"] = cfg.thinning;
  j["recording"] = std::string(to_string(cfg.recording));
  j["replicas"] = cfg.replicas;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

/// Canonical text: sorted keys, every key present, two-space indent.
inline std::string canonical_form(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

inline std::string config_hash(const ExperimentConfig& cfg) { return to_hex(sha256(canonical_form(cfg))); }

inline TargetModel make_target(const TargetConfig& t, std::size_t n_max) {
  return TargetModel(CovarianceSpectrum(t.kappa, n_max), SobolevIndex{t.s}, t.psi_kind, t.a);
}

}  // namespace mala::experiment
