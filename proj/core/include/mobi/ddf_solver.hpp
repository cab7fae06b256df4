#pragma once

#include "mobi/lcs_solver.hpp"
#include "mobi/tensor_field.hpp"

namespace mobi {

/// Output of the directional dark-field solve. The scalar diffusion column is
/// replaced by three directional second-derivative columns:
///   I_r = a I_s + D_x dI_r/dx + D_y dI_r/dy
///         - dxx d2I_r/dx2 - dyy d2I_r/dy2 - dxy d2I_r/dxdy
struct TensorRetrieval {
  ScalarField transmission;
  ScalarField disp_x;
  ScalarField disp_y;
  ScalarField residual_rms;
  ScalarField condition;
  DiffusionTensorField tensor;
  /// Pixels whose tensor had a negative eigenvalue raised to zero.
  Mask clamped;
};

/// Least-squares tensor retrieval from K >= 6 pairs. Negative eigenvalues are
/// clamped when opts.clamp_negative_diffusion is set.
TensorRetrieval solve_tensor(const AcquisitionSet& acq, const SolverOptions& opts = {});

}  // namespace mobi
