#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mobi/scalar_field.hpp"
#include "mobi/tensor_field.hpp"
#include "run_config.hpp"

namespace mobi::cli {

/// Writes through a temporary sibling and renames it into place.
void write_text_atomic(const fs::path& path, const std::string& text);

/// Independent 64-bit seed for (run seed, stream, index); splitmix64 finaliser.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Orientation map colouring: hue = 2 * orientation, saturation = anisotropy,
/// value = mean diffusion / its maximum over valid pixels. Invalid pixels are grey.
std::vector<std::uint8_t> orientation_rgb(const EllipseMaps& maps);

/// Tracks outputs, stage timings and warnings of one command and emits the manifest.
class RunRecorder {
 public:
  RunRecorder(std::string command, const RunConfig& config);

  template <typename F>
  decltype(auto) stage(const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    struct Timer {
      RunRecorder& self;
      std::string name;
      std::chrono::steady_clock::time_point start;
      ~Timer() {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        self.timings_.emplace_back(name, dt.count());
      }
    } timer{*this, name, start};
    return body();
  }

  /// Saves a float32 TIFF and records its checksum.
  void save(const fs::path& path, const ScalarField& field);
  void save_text(const fs::path& path, const std::string& text);
  void record(const fs::path& path);
  void warn(const std::string& message);

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::map<std::string, std::string>& checksums() const { return checksums_; }

  /// Writes <output_dir>/manifest_<command>.json and returns its path.
  fs::path write_manifest() const;

 private:
  std::string command_;
  const RunConfig& config_;
  std::vector<std::pair<std::string, double>> timings_;
  std::map<std::string, std::string> checksums_;
  std::vector<std::string> warnings_;
};

}  // namespace mobi::cli
