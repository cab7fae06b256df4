#include "mobi/saxs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mobi/error.hpp"
#include "mobi/forward_sim.hpp"

namespace mobi {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

void SaxsPattern::validate() const {
  if (image.empty()) fail(ErrorCode::kDimension, "SAXS image is empty");
  image.require_finite("SAXS image");
  if (!(q_per_px > 0.0)) fail(ErrorCode::kDomain, "q_per_px must be > 0");
  if (!(beam_center_row >= 0.0 && beam_center_row <= static_cast<double>(image.rows() - 1) &&
        beam_center_col >= 0.0 && beam_center_col <= static_cast<double>(image.cols() - 1))) {
    fail(ErrorCode::kDomain, "beam centre outside the image");
  }
  if (excluded.size() != 0 && (excluded.rows() != image.rows() || excluded.cols() != image.cols())) {
    fail(ErrorCode::kShapeMismatch, "SAXS mask shape differs from the image");
  }
}

std::size_t AzimuthalProfile::filled_bins() const {
  return static_cast<std::size_t>(
      std::count_if(intensity.begin(), intensity.end(), [](const auto& v) { return v.has_value(); }));
}

AzimuthalProfile azimuthal_profile(const SaxsPattern& pattern, double q_min, double q_max,
                                   std::size_t n_bins) {
  pattern.validate();
  if (!(q_min > 0.0 && q_min < q_max)) fail(ErrorCode::kDomain, "need 0 < q_min < q_max");
  if (n_bins < 8) fail(ErrorCode::kDomain, "need at least 8 azimuthal bins");

  const double bin_width = 360.0 / static_cast<double>(n_bins);
  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  const bool masked = pattern.excluded.size() != 0;
  for (std::size_t r = 0; r < pattern.image.rows(); ++r) {
    for (std::size_t c = 0; c < pattern.image.cols(); ++c) {
      if (masked && pattern.excluded(r, c)) continue;
      const double dx = static_cast<double>(c) - pattern.beam_center_col;
      const double dy = static_cast<double>(r) - pattern.beam_center_row;
      const double q = std::hypot(dx, dy) * pattern.q_per_px;
      if (q < q_min || q > q_max) continue;
      double chi = std::atan2(dy, dx) / kDeg;
      if (chi < 0.0) chi += 360.0;
      const auto bin = std::min(static_cast<std::size_t>(chi / bin_width), n_bins - 1);
      sums[bin] += pattern.image(r, c);
      ++counts[bin];
    }
  }

  AzimuthalProfile profile;
  profile.q_min = q_min;
  profile.q_max = q_max;
  profile.chi_deg.resize(n_bins);
  profile.intensity.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    profile.chi_deg[b] = (static_cast<double>(b) + 0.5) * bin_width;
    if (counts[b] > 0) profile.intensity[b] = sums[b] / static_cast<double>(counts[b]);
  }
  if (profile.filled_bins() == 0) fail(ErrorCode::kDomain, "annulus contains no unmasked pixels");
  return profile;
}

SaxsOrientation orientation_from_pattern(const AzimuthalProfile& profile,
                                         const OrientationOptions& opts) {
  if (!(opts.chi_width_deg > 0.0 && opts.chi_width_deg <= 360.0)) {
    fail(ErrorCode::kDomain, "chi_width_deg must lie in (0, 360]");
  }
  double sxx = 0.0, syy = 0.0, sxy = 0.0, total_abs = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < profile.chi_deg.size(); ++b) {
    if (!profile.intensity[b]) continue;
    double offset = std::fmod(profile.chi_deg[b] - opts.chi_start_deg, 360.0);
    if (offset < 0.0) offset += 360.0;
    if (offset >= opts.chi_width_deg) continue;
    const double value = *profile.intensity[b];
    const double c = std::cos(profile.chi_deg[b] * kDeg);
    const double s = std::sin(profile.chi_deg[b] * kDeg);
    sxx += value * c * c;
    syy += value * s * s;
    sxy += value * c * s;
    total_abs += std::abs(value);
    ++used;
  }
  if (used < 8) {
    fail(ErrorCode::kDomain, "orientation needs at least 8 non-empty bins in the interval, got " +
                                 std::to_string(used));
  }
  SaxsOrientation out;
  if (total_abs == 0.0) return out;

  const TensorEigen eig = eigen_decompose(sxx, syy, 2.0 * sxy);
  const double trace = eig.lambda1 + eig.lambda2;
  out.psi_deg = eig.angle_deg;
  out.anisotropy = trace > 0.0 ? std::clamp((eig.lambda1 - eig.lambda2) / trace, 0.0, 1.0) : 0.0;
  out.defined = trace > 0.0 && out.anisotropy >= opts.anisotropy_floor;
  return out;
}

DdfSaxsComparison compare_ddf_saxs(const EllipseMaps& ellipse, const Roi& roi, double psi_deg) {
  if (roi.rows() != ellipse.valid.rows() || roi.cols() != ellipse.valid.cols()) {
    fail(ErrorCode::kShapeMismatch, "ROI shape differs from the orientation map");
  }
  if (!(psi_deg >= 0.0 && psi_deg < 180.0)) fail(ErrorCode::kDomain, "psi outside [0, 180)");
  const std::size_t roi_pixels = roi.count();
  if (roi_pixels == 0) fail(ErrorCode::kCoverage, "ROI is empty");

  std::vector<double> angles;
  for (std::size_t i = 0; i < roi.size(); ++i) {
    if (roi[i] && ellipse.valid[i]) angles.push_back(ellipse.orientation_deg[i]);
  }
  DdfSaxsComparison out;
  out.coverage = static_cast<double>(angles.size()) / static_cast<double>(roi_pixels);
  if (out.coverage < 0.5) {
    fail(ErrorCode::kCoverage, "only " + std::to_string(angles.size()) + " of " +
                                   std::to_string(roi_pixels) + " ROI pixels carry a valid orientation");
  }
  out.ddf_mean_deg = circular_mean_orientation(angles);
  out.ddf_fiber_deg = fold_orientation(out.ddf_mean_deg + 90.0);
  out.saxs_fiber_deg = fold_orientation(psi_deg + 90.0);
  out.difference_deg = orientation_difference(out.ddf_fiber_deg, out.saxs_fiber_deg);
  return out;
}

SaxsPattern synthesize_fiber_pattern(const SyntheticSaxsSpec& spec) {
  if (spec.rows < 16 || spec.cols < 16) fail(ErrorCode::kDimension, "SAXS pattern too small");
  if (!(spec.lobe_width_deg > 0.0) || !(spec.q_decay > 0.0) || !(spec.q_per_px > 0.0)) {
    fail(ErrorCode::kDomain, "lobe width, q_decay and q_per_px must be > 0");
  }
  const double scatter_axis = fold_orientation(spec.fiber_deg + 90.0);
  SaxsPattern p;
  p.image = ScalarField(spec.rows, spec.cols);
  p.beam_center_row = spec.beam_center_row;
  p.beam_center_col = spec.beam_center_col;
  p.q_per_px = spec.q_per_px;
  p.excluded = Mask(spec.rows, spec.cols);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const double dx = static_cast<double>(c) - spec.beam_center_col;
      const double dy = static_cast<double>(r) - spec.beam_center_row;
      const double radius = std::hypot(dx, dy);
      if (radius < spec.beamstop_radius_px) {
        p.excluded.set(r, c, true);
        continue;
      }
      const double chi = fold_orientation(std::atan2(dy, dx) / kDeg);
      const double d = orientation_difference(chi, scatter_axis);
      const double lobe = std::exp(-0.5 * d * d / (spec.lobe_width_deg * spec.lobe_width_deg));
      p.image(r, c) = (spec.background + spec.lobe_amplitude * lobe) *
                      std::exp(-radius * spec.q_per_px / spec.q_decay);
    }
  }
  if (spec.photon_scale) p.image = apply_poisson_noise(p.image, *spec.photon_scale, spec.seed);
  return p;
}

}  // namespace mobi
