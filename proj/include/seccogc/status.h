// Copyright 2026 The SecCoGC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SECCOGC_STATUS_H_
#define SECCOGC_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace seccogc {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidDims,
  kDimMismatch,
  kCapExceeded,
  kUnsolvableCode,
  kNoConvergence,
  kTooManyLinks,
  kZeroNoise,
  kDegenerateNoise,
  kSingleClient,
  kBernsteinTooLarge,
  kTooFewSamples,
  kDomainError,
  kDomainWarning,
  kStepTooLarge,
  kNoSuccessBeforeCap,
  kConfigError,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidDims: return "InvalidDims";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kUnsolvableCode: return "UnsolvableCode";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kTooManyLinks: return "TooManyLinks";
    case ErrorCode::kZeroNoise: return "ZeroNoise";
    case ErrorCode::kDegenerateNoise: return "DegenerateNoise";
    case ErrorCode::kSingleClient: return "SingleClient";
    case ErrorCode::kBernsteinTooLarge: return "BernsteinTooLarge";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kDomainWarning: return "DomainWarning";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kNoSuccessBeforeCap: return "NoSuccessBeforeCap";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

// All library failures are reported through this exception type; `code()`
// identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seccogc

#endif  // SECCOGC_STATUS_H_
