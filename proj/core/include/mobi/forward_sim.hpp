#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mobi/scalar_field.hpp"
#include "mobi/tensor_field.hpp"

namespace mobi {

/// Random membrane modulation.
///
/// The pattern is log-normal with relative standard deviation `contrast`; its
/// autocovariance is Gaussian with standard deviation `grain_size_px`, so the
/// autocorrelation FWHM is 2.355 * grain_size_px.
struct SpeckleSpec {
  std::uint64_t seed = 1;
  double grain_size_px = 2.0;
  double contrast = 0.3;
  double mean_intensity = 1000.0;

  void validate() const;
};

ScalarField generate_speckle(const SpeckleSpec& spec, std::size_t rows, std::size_t cols);

struct PixelPoint {
  double row = 0.0;
  double col = 0.0;
};

/// Homogeneous refracting cylinder lying in the image plane.
struct Cylinder {
  PixelPoint center;            // any point on the axis
  double radius_px = 10.0;
  double axis_angle_deg = 90.0; // 0 = along +x (columns), 90 = along +y (rows)
  double delta = 1e-6;          // refractive index decrement
  double mu_t = 0.0;            // attenuation per pixel of traversed thickness
};

/// Region of aligned sub-pixel scatterers.
struct FiberBundle {
  std::vector<PixelPoint> polygon;
  double orientation_deg = 0.0;  // fiber axis, [0, 180)
  double d_parallel = 0.0;       // spread along the fibers, pixel^2
  double d_perp = 0.0;           // spread across the fibers, pixel^2
  double mu_t = 0.0;             // optical depth at full strength
  /// Width of a smooth ramp inside the polygon boundary; 0 gives a hard edge.
  double feather_px = 0.0;
};

using PhantomElement = std::variant<Cylinder, FiberBundle>;

struct PhantomSpec {
  std::vector<PhantomElement> elements;

  /// Checks primitive parameters and that every primitive fits inside the grid.
  void validate(std::size_t rows, std::size_t cols) const;
};

struct GroundTruth {
  ScalarField transmission;
  ScalarField disp_x;  // pixels
  ScalarField disp_y;  // pixels
  DiffusionTensorField tensor;
};

/// Nylon-like cylinder plus two feathered fiber bundles at 30 and 120 degrees.
/// Laid out for 512x512 and scaled to the grid; needs at least 128x128.
PhantomSpec default_phantom(std::size_t rows, std::size_t cols);

/// Pixels whose centres lie inside `polygon` and at least `inset_px` from its edges.
Mask polygon_mask(const std::vector<PixelPoint>& polygon, std::size_t rows, std::size_t cols,
                  double inset_px = 0.0);

/// Analytic maps for a phantom. Cylinder refraction is averaged over the pixel
/// width normal to the axis, which keeps the edge pixels finite.
GroundTruth render_phantom(const PhantomSpec& phantom, std::size_t rows, std::size_t cols,
                           const Geometry& geometry);

/// Projected thickness of a cylinder, 2*sqrt(r^2 - s^2), at normal offset s.
double cylinder_thickness(double radius, double offset) noexcept;

struct SimulatedImage {
  ScalarField image;
  std::vector<std::string> warnings;
};

/// Sample image: transmission x blur(warp(reference)). Poisson noise with
/// `photon_scale` counts per intensity unit is applied last when given.
SimulatedImage simulate_acquisition(const ScalarField& reference, const GroundTruth& truth,
                                    std::optional<double> photon_scale = std::nullopt,
                                    std::uint64_t seed = 0);

/// Bilinear pull warp: out(p) = in(p - d(p)), coordinates clamped to the grid.
ScalarField warp_bilinear(const ScalarField& in, const ScalarField& disp_x,
                          const ScalarField& disp_y);

/// Spatially varying anisotropic Gaussian blur by scatter accumulation.
///
/// Every input pixel deposits a normalized kernel whose second-moment matrix is
/// 2 * T(p), T being that pixel's diffusion tensor; to first order the result is
/// in + d_i d_j [T_ij in]. Kernels are moment-matched on the pixel lattice.
ScalarField anisotropic_blur(const ScalarField& in, const DiffusionTensorField& tensor);

/// Draws Poisson(value * photon_scale) / photon_scale per pixel.
ScalarField apply_poisson_noise(const ScalarField& in, double photon_scale, std::uint64_t seed);

}  // namespace mobi
