#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mobi {

/// Error classes. Each maps to a distinct process exit code in the CLI.
enum class ErrorCode {
  kDimension = 1,               // grid too small for a stencil or simulator
  kInsufficientMeasurements,    // fewer pairs than unknowns
  kData,                        // non-finite or non-positive input data
  kDomain,                      // argument outside its mathematical domain
  kCoverage,                    // too few valid pixels in a region
  kShapeMismatch,               // fields of differing shape combined
  kUnreadableFile,              // missing, truncated or corrupt file
  kUnsupportedFormat,           // valid file, unsupported layout or bit depth
  kMissingArtifact,             // expected output/truth map absent
  kConfig,                      // run configuration failed validation
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mobi
