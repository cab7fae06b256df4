#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mobi/scalar_field.hpp"
#include "mobi/tensor_field.hpp"

namespace mobi {

/// 2D small-angle scattering image with its calibration.
struct SaxsPattern {
  ScalarField image;
  double beam_center_row = 0.0;
  double beam_center_col = 0.0;
  double q_per_px = 1.0;
  Mask excluded;  // beamstop / dead pixels; empty means nothing excluded

  void validate() const;
};

/// Mean intensity per azimuth bin over an annulus q_min <= q <= q_max.
/// Azimuth chi runs from +x (columns) toward +y (rows).
struct AzimuthalProfile {
  std::vector<double> chi_deg;                   // bin centres over [0, 360)
  std::vector<std::optional<double>> intensity;  // nullopt marks an empty bin
  double q_min = 0.0;
  double q_max = 0.0;

  std::size_t filled_bins() const;
};

AzimuthalProfile azimuthal_profile(const SaxsPattern& pattern, double q_min, double q_max,
                                   std::size_t n_bins);

struct OrientationOptions {
  /// Azimuthal interval [start, start + width) used by the anisotropy tensor.
  double chi_start_deg = 0.0;
  double chi_width_deg = 360.0;
  /// Below this anisotropy the orientation is reported undefined.
  double anisotropy_floor = 0.02;
};

struct SaxsOrientation {
  double psi_deg = 0.0;     // principal scattering axis, [0, 180)
  double anisotropy = 0.0;  // (l1 - l2) / (l1 + l2)
  bool defined = false;
};

/// Second-moment tensor M = sum_bins I(chi) u u^T with u = (cos chi, sin chi);
/// psi is the principal-eigenvector angle.
SaxsOrientation orientation_from_pattern(const AzimuthalProfile& profile,
                                         const OrientationOptions& opts = {});

/// Pixel region for DDF/SAXS comparisons.
using Roi = Mask;

struct DdfSaxsComparison {
  double ddf_mean_deg = 0.0;    // mean DDF scattering axis over the ROI
  double ddf_fiber_deg = 0.0;   // ddf_mean_deg + 90, folded
  double saxs_fiber_deg = 0.0;  // psi + 90, folded
  double difference_deg = 0.0;  // between the two fiber axes, [0, 90]
  double coverage = 0.0;        // valid fraction of the ROI
};

/// Both methods measure the scattering axis, which lies perpendicular to the
/// fibers; each is rotated by 90 degrees before the axes are compared.
/// Requires valid-mask coverage >= 50% of the ROI.
DdfSaxsComparison compare_ddf_saxs(const EllipseMaps& ellipse, const Roi& roi, double psi_deg);

/// Synthetic fiber scattering: two centrosymmetric Gaussian lobes across
/// `fiber_deg` on an isotropic background, with an exp(-q/q_decay) radial falloff.
struct SyntheticSaxsSpec {
  std::size_t rows = 256;
  std::size_t cols = 256;
  double beam_center_row = 127.5;
  double beam_center_col = 127.5;
  double q_per_px = 1.0;
  double fiber_deg = 0.0;
  double lobe_width_deg = 12.0;
  double lobe_amplitude = 1000.0;
  double background = 100.0;
  double q_decay = 60.0;
  double beamstop_radius_px = 6.0;
  std::optional<double> photon_scale;  // Poisson noise when set
  std::uint64_t seed = 0;
};

SaxsPattern synthesize_fiber_pattern(const SyntheticSaxsSpec& spec);

}  // namespace mobi
