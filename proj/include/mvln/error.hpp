// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvln {

enum class ErrorCode {
  kIo,
  kMalformedFile,
  kNonFiniteValue,
  kShapeMismatch,
  kEmptyMask,
  kDuplicateName,
  kDegenerateBox,
  kEmptyCluster,
  kLengthMismatch,
  kMissingPair,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mvln
