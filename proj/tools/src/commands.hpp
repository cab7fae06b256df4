#pragma once

#include <iosfwd>

#include "mobi/error.hpp"
#include "run_config.hpp"

namespace mobi::cli {

// Output layout under RunConfig::output_dir:
//   acquisition/ref_NN.tif, sample_NN.tif        simulate
//   truth/*.tif, truth/phantom.json, truth/saxs/  simulate
//   retrieved/*.tif (+ tensor and ellipse maps)   retrieve
//   decomposed/*.tif, orientation_hsv.ppm         decompose
//   saxs_orient/orientation.txt, profile_*.csv    saxs-orient
//   compare/metrics.txt, compare/table.txt        compare
//   manifest_<command>.json                       every command

void run_simulate(const RunConfig& cfg, std::ostream& log);
void run_retrieve(const RunConfig& cfg, std::ostream& log);
void run_decompose(const RunConfig& cfg, std::ostream& log);
void run_saxs_orient(const RunConfig& cfg, std::ostream& log);
void run_compare(const RunConfig& cfg, std::ostream& log);

/// Process exit status for an error class: 10 + the enumerator value.
int exit_code(ErrorCode code) noexcept;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInternal = 1;

/// Full command-line entry point; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mobi::cli
