// Copyright 2026 The ladc Authors.
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

namespace ladc {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNonFinite,
  // LTNS decoding.
  kBadMagic,
  kBadVersion,
  kBadDtype,
  kTruncated,
  kDimensionOverflow,
  kInvalidShape,
  // Files and datasets.
  kIo,
  kDataset,
  kImageDecode,
  // Model evaluation.
  kUnknownLayer,
  kLayerConfigMismatch,
  kUndefinedGradient,
  kRunnerHandshakeTimeout,
  kRunnerProtocolMismatch,
  kRunnerMalformedReply,
  kRunnerExited,
  kRunnerFailed,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// C API and the CLI can map it to a status and an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline bool is_runner_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kRunnerHandshakeTimeout:
    case ErrorCode::kRunnerProtocolMismatch:
    case ErrorCode::kRunnerMalformedReply:
    case ErrorCode::kRunnerExited:
    case ErrorCode::kRunnerFailed:
    case ErrorCode::kUnknownLayer:
      return true;
    default:
      return false;
  }
}

}  // namespace ladc
