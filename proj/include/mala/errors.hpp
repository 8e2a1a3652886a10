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

#include <stdexcept>
#include <string>

namespace mala {

// Violated precondition on an argument (dimension mismatch, bad grid, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Exact stationary sampling requested for a target that has no closed form.
class UnsupportedTargetError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A trace was recorded without the information a diagnostic needs.
class RecordingPolicyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The Q decomposition only exists at the critical exponent 1/3.
class DecompositionUndefinedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Autocorrelation rate fit had no usable lags.
class FitFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mala
