#pragma once

#include <vector>

#include "mobi/scalar_field.hpp"

namespace mobi {

/// Per-pixel outputs of the scalar dark-field solve.
struct RetrievalMaps {
  ScalarField transmission;  // 1 / a, floored at min_transmission
  ScalarField disp_x;        // pixels
  ScalarField disp_y;        // pixels
  ScalarField diffusion;     // z2 * D_f in pixel^2
  ScalarField residual_rms;  // RMS of the K-row fit residual
  ScalarField condition;     // 2-norm condition number of the K x n design matrix
};

struct SolverOptions {
  double tikhonov_lambda = 0.0;        // damping on every column except a
  bool clamp_negative_diffusion = true;
  double min_transmission = 0.01;

  void validate() const;
};

/// Condition numbers are capped here so maps stay finite.
inline constexpr double kConditionCap = 1e16;

/// Scalar system at one pixel, columns (a, D_x, D_y, D_f) with
///   I_r = a I_s + D_x dI_r/dx + D_y dI_r/dy - D_f lap(I_r).
struct PixelSystem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> matrix;  // row-major rows x cols
  std::vector<double> rhs;

  double at(std::size_t r, std::size_t c) const { return matrix[r * cols + c]; }
};

/// Reference-image derivatives of one pair, computed once per acquisition.
struct ScalarColumns {
  ScalarField grad_x;
  ScalarField grad_y;
  ScalarField laplacian;
};

ScalarColumns scalar_columns(const ScalarField& reference);

PixelSystem assemble_pixel_system(const AcquisitionSet& acq,
                                  const std::vector<ScalarColumns>& columns, std::size_t row,
                                  std::size_t col);

/// Convenience overload that computes the stencils itself.
PixelSystem assemble_pixel_system(const AcquisitionSet& acq, std::size_t row, std::size_t col);

/// Least-squares retrieval from K >= 4 pairs.
RetrievalMaps solve_scalar(const AcquisitionSet& acq, const SolverOptions& opts = {});

/// Refraction angles in radians: alpha = displacement * pitch / z2.
struct RefractionMaps {
  ScalarField alpha_x;
  ScalarField alpha_y;
};

RefractionMaps refraction_from_displacement(const ScalarField& disp_x, const ScalarField& disp_y,
                                            const Geometry& geometry);
RefractionMaps refraction_from_displacement(const RetrievalMaps& maps, const Geometry& geometry);

}  // namespace mobi
