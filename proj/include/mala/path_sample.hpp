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

#include <cstddef>
#include <string_view>
#include <vector>

#include "mala/errors.hpp"
#include "mala/spectral_space.hpp"

namespace mala {

enum class PathKind { kInterpolatedChain, kPiecewiseConstantChain, kEulerSpde, kRescaledNoise };

inline std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::kInterpolatedChain: return "interpolated-chain";
    case PathKind::kPiecewiseConstantChain: return "piecewise-constant-chain";
    case PathKind::kEulerSpde: return "euler-spde";
    case PathKind::kRescaledNoise: return "rescaled-noise";
  }
  return "unknown";
}

/// A path in algorithmic time: values[i] is the (possibly coordinate-truncated)
/// field at times[i]. Times start at 0 and increase strictly.
struct PathSample {
  std::vector<double> times;
  std::vector<SpectralField> values;
  PathKind kind = PathKind::kInterpolatedChain;
  // Set when a drift approximation was substituted while building the path.
  bool approximate = false;

  void validate() const {
    if (times.size() != values.size()) throw ContractError("PathSample: times/values length mismatch");
    if (!times.empty() && times.front() != 0.0) throw ContractError("PathSample: times must start at 0");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw ContractError("PathSample: times must increase strictly");
    }
  }

  // Coordinate series (0-based index) along the path.
  [[nodiscard]] std::vector<double> coordinate(std::size_t index) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& v : values) {
      if (index >= v.dim()) throw ContractError("PathSample: coordinate not recorded");
      out.push_back(v[index]);
    }
    return out;
  }
};

}  // namespace mala
