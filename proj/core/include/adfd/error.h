// Copyright 2026 The adfd Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADFD_ERROR_H_
#define ADFD_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace adfd {

enum class ErrorCode {
  kIo,
  kUnsupportedFormat,
  kSampleRateMismatch,
  kEmptyAudio,
  kInvalidConfig,
  kInvalidKind,
  kShapeMismatch,
  kUnknownArch,
  kEmptyDataset,
  kLabelOutOfRange,
  kEmptyInput,
  kUtteranceMismatch,
  kEmptyClass,
  kMissingKey,
  kMalformedLine,
  kUnknownKey,
  kBadMagic,
  kVersionUnsupported,
  kConfigHashMismatch,
  kArchMismatch,
  kCorrupt,
  kRaggedRows,
  kNonNumericField,
  kUnsupportedDim,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported with this exception; code() identifies
// the failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kSampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidKind: return "InvalidKind";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUnknownArch: return "UnknownArch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUtteranceMismatch: return "UtteranceMismatch";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kConfigHashMismatch: return "ConfigHashMismatch";
    case ErrorCode::kArchMismatch: return "ArchMismatch";
    case ErrorCode::kCorrupt: return "Corrupt";
    case ErrorCode::kRaggedRows: return "RaggedRows";
    case ErrorCode::kNonNumericField: return "NonNumericField";
    case ErrorCode::kUnsupportedDim: return "UnsupportedDim";
  }
  return "Unknown";
}

}  // namespace adfd

#endif  // ADFD_ERROR_H_
