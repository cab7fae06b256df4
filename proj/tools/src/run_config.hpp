#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mobi/forward_sim.hpp"
#include "mobi/image_io.hpp"
#include "mobi/lcs_solver.hpp"
#include "mobi/saxs.hpp"
#include "mobi/scalar_field.hpp"
#include "mobi/tensor_field.hpp"

namespace mobi::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct AcquisitionFiles {
  std::vector<fs::path> references;
  std::vector<fs::path> samples;
  std::optional<RawLayout> raw;
};

struct SaxsSynthesis {
  bool enabled = true;
  SyntheticSaxsSpec spec;  // fiber_deg and seed are filled per bundle
};

struct SimulateConfig {
  std::size_t rows = 512;
  std::size_t cols = 512;
  std::size_t pairs = 10;
  SpeckleSpec speckle;                 // seed is derived per pair from the run seed
  std::optional<PhantomSpec> phantom;  // nullopt selects default_phantom
  std::optional<double> photon_scale;
  bool then_retrieve = false;
  SaxsSynthesis saxs;
};

struct SaxsPatternFile {
  std::string label;
  fs::path path;
  double beam_center_row = 0.0;
  double beam_center_col = 0.0;
  double q_per_px = 1.0;
  std::optional<fs::path> mask;  // nonzero pixels are excluded
  std::optional<RawLayout> raw;
};

struct SaxsConfig {
  std::vector<SaxsPatternFile> patterns;  // empty: use <output>/truth/saxs/patterns.json
  double q_min = 8.0;
  double q_max = 100.0;
  std::size_t bins = 72;
  OrientationOptions orientation;
};

struct RunConfig {
  Geometry geometry;
  std::uint64_t seed = 1;
  fs::path output_dir = "mobi_out";
  int threads = 0;
  SolverOptions solver;
  bool tensor = false;
  std::optional<AcquisitionFiles> acquisition;
  SimulateConfig simulate;
  SaxsConfig saxs;
  std::optional<fs::path> truth_dir;
  std::optional<fs::path> retrieved_dir;
  std::optional<fs::path> tensor_dir;
  DecomposeOptions decompose;

  Json snapshot;  // effective configuration after overrides, for the manifest
};

/// Command-line values that replace config keys.
struct Overrides {
  std::optional<bool> tensor;              // solver.tensor
  std::optional<std::uint64_t> seed;       // seed
  std::optional<fs::path> output_dir;      // output_dir
  std::optional<int> threads;              // threads
};

/// Parses and validates a configuration. Relative paths resolve against
/// `base_dir`. Every problem found is listed in one kConfig error.
RunConfig parse_config(Json doc, const fs::path& base_dir, const Overrides& overrides = {});

RunConfig load_config(const fs::path& path, const Overrides& overrides = {});

Json phantom_to_json(const PhantomSpec& phantom);
/// Throws kConfig on malformed input.
PhantomSpec phantom_from_json(const Json& j);

}  // namespace mobi::cli
