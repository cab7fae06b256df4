#include "mobi/tensor_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mobi/error.hpp"

namespace mobi {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

double fold_orientation(double deg) noexcept {
  double folded = std::fmod(deg, 180.0);
  if (folded < 0.0) folded += 180.0;
  // fmod of e.g. -1e-17 lands on 180 after the shift
  if (folded >= 180.0) folded -= 180.0;
  return folded;
}

TensorEigen eigen_decompose(double dxx, double dyy, double dxy) noexcept {
  const double mean = 0.5 * (dxx + dyy);
  const double half_diff = 0.5 * (dxx - dyy);
  const double off = 0.5 * dxy;
  const double radius = std::hypot(half_diff, off);
  TensorEigen eig;
  eig.lambda1 = mean + radius;
  eig.lambda2 = mean - radius;
  eig.angle_deg = fold_orientation(0.5 * std::atan2(dxy, dxx - dyy) / kDeg);
  return eig;
}

TensorComponents recompose(const TensorEigen& eig) noexcept {
  const double c = std::cos(eig.angle_deg * kDeg);
  const double s = std::sin(eig.angle_deg * kDeg);
  TensorComponents t;
  t.dxx = eig.lambda1 * c * c + eig.lambda2 * s * s;
  t.dyy = eig.lambda1 * s * s + eig.lambda2 * c * c;
  t.dxy = 2.0 * (eig.lambda1 - eig.lambda2) * c * s;
  return t;
}

bool clamp_to_psd(TensorComponents& t) noexcept {
  TensorEigen eig = eigen_decompose(t.dxx, t.dyy, t.dxy);
  if (eig.lambda2 >= 0.0) return false;
  eig.lambda1 = std::max(eig.lambda1, 0.0);
  eig.lambda2 = 0.0;
  t = recompose(eig);
  return true;
}

TensorComponents tensor_from_axis(double axis_deg, double across, double along) noexcept {
  TensorEigen eig;
  eig.lambda1 = across;
  eig.lambda2 = along;
  eig.angle_deg = fold_orientation(axis_deg + 90.0);
  return recompose(eig);
}

EllipseMaps decompose_tensor(const DiffusionTensorField& t, const DecomposeOptions& opts) {
  require_same_shape(t.dxx, t.dyy, "tensor dyy");
  require_same_shape(t.dxx, t.dxy, "tensor dxy");
  const std::size_t rows = t.rows(), cols = t.cols();
  EllipseMaps out{ScalarField(rows, cols), ScalarField(rows, cols), ScalarField(rows, cols),
                  Mask(rows, cols)};
  for (std::size_t i = 0; i < t.dxx.size(); ++i) {
    const TensorEigen eig = eigen_decompose(t.dxx[i], t.dyy[i], t.dxy[i]);
    const double trace = eig.lambda1 + eig.lambda2;
    double anisotropy = 0.0;
    if (trace > opts.diffusion_floor) {
      anisotropy = std::clamp((eig.lambda1 - eig.lambda2) / trace, 0.0, 1.0);
    }
    const double mean = std::max(0.5 * trace, 0.0);
    out.orientation_deg[i] = eig.angle_deg;
    out.anisotropy[i] = anisotropy;
    out.mean_diffusion[i] = mean;
    out.valid.set(i, anisotropy >= opts.anisotropy_floor && mean >= opts.diffusion_floor);
  }
  return out;
}

double orientation_difference(double a_deg, double b_deg) {
  auto check = [](double v) {
    if (!(v >= 0.0 && v < 180.0)) {
      fail(ErrorCode::kDomain, "orientation " + std::to_string(v) + " outside [0, 180)");
    }
  };
  check(a_deg);
  check(b_deg);
  const double d = std::abs(a_deg - b_deg);
  return std::min(d, 180.0 - d);
}

double circular_mean_orientation(std::span<const double> angles_deg) {
  if (angles_deg.empty()) fail(ErrorCode::kDomain, "circular mean of an empty set");
  double sum_c = 0.0, sum_s = 0.0;
  for (double a : angles_deg) {
    sum_c += std::cos(2.0 * a * kDeg);
    sum_s += std::sin(2.0 * a * kDeg);
  }
  if (std::hypot(sum_c, sum_s) < 1e-12 * static_cast<double>(angles_deg.size())) {
    fail(ErrorCode::kDomain, "orientations cancel; mean axis undefined");
  }
  return fold_orientation(0.5 * std::atan2(sum_s, sum_c) / kDeg);
}

}  // namespace mobi
