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

#include <stdexcept>
#include <string>
#include <string_view>

namespace pidcap {

enum class ErrorCode {
  DegenerateTriple,
  ParameterOutOfRange,
  SearchExhausted,
  UnknownPlant,
  BadParams,
  NonFiniteDerivative,
  ShiftUndefined,
  InsufficientData,
  NotOnFacet,
  BeyondBound,
  ZeroIntegralGain,
  ComplexInitialState,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DegenerateTriple: return "DegenerateTriple";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::SearchExhausted: return "SearchExhausted";
    case ErrorCode::UnknownPlant: return "UnknownPlant";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::NonFiniteDerivative: return "NonFiniteDerivative";
    case ErrorCode::ShiftUndefined: return "ShiftUndefined";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NotOnFacet: return "NotOnFacet";
    case ErrorCode::BeyondBound: return "BeyondBound";
    case ErrorCode::ZeroIntegralGain: return "ZeroIntegralGain";
    case ErrorCode::ComplexInitialState: return "ComplexInitialState";
  }
  return "Unknown";
}

/// Exception type for every recoverable failure in the library. The code is
/// stable and machine-checkable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pidcap
