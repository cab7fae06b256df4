#include "artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mobi/checksum.hpp"
#include "mobi/error.hpp"
#include "mobi/image_io.hpp"

#ifndef MOBI_VERSION
#define MOBI_VERSION "unknown"
#endif

namespace mobi::cli {

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kUnreadableFile, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) fail(ErrorCode::kUnreadableFile, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (1 + stream * 0x10001ULL + index * 0x1000193ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::uint8_t> orientation_rgb(const EllipseMaps& maps) {
  const std::size_t n = maps.orientation_deg.size();
  double vmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (maps.valid[i]) vmax = std::max(vmax, maps.mean_diffusion[i]);

  std::vector<std::uint8_t> rgb(3 * n);
  auto to_byte = [](double x) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(x, 0.0, 1.0)));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double v = vmax > 0.0 ? maps.mean_diffusion[i] / vmax : 0.0;
    const double s = maps.valid[i] ? std::clamp(maps.anisotropy[i], 0.0, 1.0) : 0.0;
    const double h = std::fmod(2.0 * maps.orientation_deg[i], 360.0) / 60.0;
    const double c = v * s;
    const double x = c * (1.0 - std::fabs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h) % 6) {
      case 0: r = c; g = x; break;
      case 1: r = x; g = c; break;
      case 2: g = c; b = x; break;
      case 3: g = x; b = c; break;
      case 4: r = x; b = c; break;
      default: r = c; b = x; break;
    }
    const double m = v - c;
    rgb[3 * i] = to_byte(r + m);
    rgb[3 * i + 1] = to_byte(g + m);
    rgb[3 * i + 2] = to_byte(b + m);
  }
  return rgb;
}

RunRecorder::RunRecorder(std::string command, const RunConfig& config)
    : command_(std::move(command)), config_(config) {}

void RunRecorder::save(const fs::path& path, const ScalarField& field) {
  fs::create_directories(path.parent_path());
  save_image(path, field, SampleType::kFloat32);
  record(path);
}

void RunRecorder::save_text(const fs::path& path, const std::string& text) {
  write_text_atomic(path, text);
  record(path);
}

void RunRecorder::record(const fs::path& path) {
  const fs::path rel = path.lexically_relative(config_.output_dir);
  const std::string key = rel.empty() || *rel.begin() == ".." ? path.string() : rel.generic_string();
  checksums_[key] = sha256_file(path);
}

void RunRecorder::warn(const std::string& message) {
  if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end())
    warnings_.push_back(message);
}

fs::path RunRecorder::write_manifest() const {
  Json timings = Json::object();
  for (const auto& [name, seconds] : timings_) timings[name] = seconds;
  Json outputs = Json::object();
  for (const auto& [name, sha] : checksums_) outputs[name] = sha;
  Json manifest{{"tool", "mobi"},
                {"version", MOBI_VERSION},
                {"command", command_},
                {"config", config_.snapshot},
                {"timings_s", timings},
                {"outputs", outputs},
                {"warnings", warnings_}};
  const fs::path path = config_.output_dir / ("manifest_" + command_ + ".json");
  write_text_atomic(path, manifest.dump(2) + "\n");
  return path;
}

}  // namespace mobi::cli
