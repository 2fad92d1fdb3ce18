// SPDX-FileCopyrightText: 2026 The MVLidarNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvln/error.hpp"

namespace mvln {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kEmptyCluster: return "EmptyCluster";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMissingPair: return "MissingPair";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace mvln
