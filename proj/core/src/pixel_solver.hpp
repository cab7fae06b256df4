#pragma once

// Per-pixel least-squares engine shared by the scalar and tensor solvers.

#include <functional>
#include <vector>

#include "mobi/lcs_solver.hpp"

namespace mobi::detail {

/// Column 0 is the sample intensity (unknown a); columns 1.. are reference
/// derivative terms. `fill(k, row, col, out)` writes the n values of row k.
struct ColumnSource {
  std::size_t unknowns = 0;
  std::function<void(std::size_t k, std::size_t index, double* out)> fill;
};

struct PixelFits {
  std::vector<ScalarField> unknowns;  // n fields
  ScalarField residual_rms;
  ScalarField condition;
  Mask flat;  // pixels where only `a` was fitted
};

PixelFits solve_pixels(const AcquisitionSet& acq, const ColumnSource& source,
                       const SolverOptions& opts);

/// a -> transmission with the configured floor.
double transmission_from_a(double a, double min_transmission) noexcept;

}  // namespace mobi::detail
