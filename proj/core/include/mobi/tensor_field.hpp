#pragma once

#include <span>

#include "mobi/scalar_field.hpp"

namespace mobi {

/// Per-pixel symmetric 2x2 diffusion tensor in pixel^2.
///
/// `dxy` is the full coefficient of the mixed second derivative d2/dxdy, so
/// the quadratic form is [[dxx, dxy/2], [dxy/2, dyy]].
struct DiffusionTensorField {
  ScalarField dxx;
  ScalarField dyy;
  ScalarField dxy;

  DiffusionTensorField() = default;
  DiffusionTensorField(std::size_t rows, std::size_t cols)
      : dxx(rows, cols), dyy(rows, cols), dxy(rows, cols) {}

  std::size_t rows() const noexcept { return dxx.rows(); }
  std::size_t cols() const noexcept { return dxx.cols(); }
};

/// Eigen-decomposition of [[dxx, dxy/2], [dxy/2, dyy]] with lambda1 >= lambda2.
struct TensorEigen {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  /// Angle of the lambda1 eigenvector from +x toward +y, folded to [0, 180).
  double angle_deg = 0.0;
};

TensorEigen eigen_decompose(double dxx, double dyy, double dxy) noexcept;

struct TensorComponents {
  double dxx = 0.0;
  double dyy = 0.0;
  double dxy = 0.0;
};

/// Inverse of eigen_decompose; returns components in the dxy-full convention.
TensorComponents recompose(const TensorEigen& eig) noexcept;

/// Raises negative eigenvalues to zero. Returns true when anything changed.
bool clamp_to_psd(TensorComponents& t) noexcept;

/// Tensor built from a scattering strength across and along an axis.
/// `axis_deg` is the direction of weakest spread (e.g. a fiber axis).
TensorComponents tensor_from_axis(double axis_deg, double across, double along) noexcept;

struct EllipseMaps {
  ScalarField orientation_deg;  // lambda1 axis, [0, 180)
  ScalarField anisotropy;       // (l1 - l2) / (l1 + l2), [0, 1]
  ScalarField mean_diffusion;   // (l1 + l2) / 2, >= 0
  Mask valid;                   // orientation is meaningful only here
};

struct DecomposeOptions {
  double anisotropy_floor = 0.05;
  double diffusion_floor = 1e-3;
};

EllipseMaps decompose_tensor(const DiffusionTensorField& t, const DecomposeOptions& opts = {});

/// Folds any angle to [0, 180).
double fold_orientation(double deg) noexcept;

/// Smallest angle between two axes, in [0, 90]. Inputs must lie in [0, 180).
double orientation_difference(double a_deg, double b_deg);

/// 180-degree periodic circular mean. Throws kDomain on an empty set or when the
/// resultant vanishes (no defined mean axis).
double circular_mean_orientation(std::span<const double> angles_deg);

}  // namespace mobi
