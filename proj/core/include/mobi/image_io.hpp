#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mobi/scalar_field.hpp"

namespace mobi {

enum class SampleType { kFloat32, kFloat64 };

/// Dimensions for headerless raw files (little-endian, row-major).
struct RawLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  SampleType type = SampleType::kFloat32;
};

/// Reads a single-plane uncompressed TIFF (8/16/32-bit integer, 32/64-bit
/// float, either byte order). Files ending in .raw or .bin need `raw`.
///
/// Errors: kUnreadableFile for missing/truncated/corrupt files,
/// kUnsupportedFormat for valid TIFFs outside that subset,
/// kShapeMismatch when a raw file's size disagrees with `raw`.
ScalarField load_image(const std::filesystem::path& path,
                       const std::optional<RawLayout>& raw = std::nullopt);

/// Writes a little-endian single-strip TIFF, or raw samples for .raw/.bin.
/// The file is written to a temporary name and renamed into place.
void save_image(const std::filesystem::path& path, const ScalarField& field,
                SampleType type = SampleType::kFloat32);

/// 8-bit binary PPM.
void save_rgb_ppm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                  const std::vector<std::uint8_t>& rgb);

}  // namespace mobi
