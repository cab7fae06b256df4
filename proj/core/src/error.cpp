#include "mobi/error.hpp"

namespace mobi {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kInsufficientMeasurements: return "insufficient-measurements";
    case ErrorCode::kData: return "data";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kCoverage: return "coverage";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kUnreadableFile: return "unreadable-file";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kMissingArtifact: return "missing-artifact";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mobi
