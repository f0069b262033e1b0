// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VGLOC_ERROR_HPP
#define VGLOC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace vgloc {

enum class ErrorCode {
  NonFinite,
  OutOfRange,
  InvalidTransform,
  EmptyDepth,
  DegenerateResidual,
  DimensionMismatch,
  EmptyMemory,
  EmptySequence,
  EmptyDataset,
  EmptyInput,
  LengthMismatch,
  ShapeMismatch,
  NoForwardState,
  UnknownLap,
  OverlapError,
  ConfigError,
  DataError,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace vgloc

#endif  // VGLOC_ERROR_HPP
