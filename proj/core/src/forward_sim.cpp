#include "mobi/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mobi/error.hpp"

namespace mobi {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Normalized 1D Gaussian taps over [-radius, radius].
std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Antiderivative of the cylinder thickness 2*sqrt(r^2 - s^2), clipped to |s| <= r.
double thickness_integral(double radius, double s) {
  const double u = std::clamp(s, -radius, radius);
  return u * std::sqrt(radius * radius - u * u) + radius * radius * std::asin(u / radius);
}

bool inside_polygon(const std::vector<PixelPoint>& poly, double row, double col) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const PixelPoint& a = poly[i];
    const PixelPoint& b = poly[j];
    if ((a.row > row) != (b.row > row)) {
      const double cross = a.col + (row - a.row) * (b.col - a.col) / (b.row - a.row);
      if (col < cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_boundary(const std::vector<PixelPoint>& poly, double row, double col) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const double ar = poly[j].row, ac = poly[j].col;
    const double er = poly[i].row - ar, ec = poly[i].col - ac;
    const double len2 = er * er + ec * ec;
    double t = len2 > 0.0 ? ((row - ar) * er + (col - ac) * ec) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(row - (ar + t * er), col - (ac + t * ec)));
  }
  return best;
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

void render_cylinder(const Cylinder& cyl, const Geometry& geometry, GroundTruth& truth) {
  const double theta = cyl.axis_angle_deg * kDeg;
  // unit normal to the axis, (x, y) = (col, row)
  const double nx = -std::sin(theta);
  const double ny = std::cos(theta);
  const double r = cyl.radius_px;
  const double to_pixels = geometry.z2_um() / geometry.pixel_pitch_um;
  for (std::size_t row = 0; row < truth.transmission.rows(); ++row) {
    for (std::size_t col = 0; col < truth.transmission.cols(); ++col) {
      const double s = (static_cast<double>(col) - cyl.center.col) * nx +
                       (static_cast<double>(row) - cyl.center.row) * ny;
      if (s - 0.5 >= r || s + 0.5 <= -r) continue;
      const double mean_thickness = thickness_integral(r, s + 0.5) - thickness_integral(r, s - 0.5);
      const double mean_slope = cylinder_thickness(r, s + 0.5) - cylinder_thickness(r, s - 0.5);
      const double alpha = -cyl.delta * mean_slope;
      truth.transmission(row, col) *= std::exp(-cyl.mu_t * mean_thickness);
      truth.disp_x(row, col) += to_pixels * alpha * nx;
      truth.disp_y(row, col) += to_pixels * alpha * ny;
    }
  }
}

void render_bundle(const FiberBundle& bundle, GroundTruth& truth) {
  const TensorComponents full =
      tensor_from_axis(bundle.orientation_deg, bundle.d_perp, bundle.d_parallel);
  for (std::size_t row = 0; row < truth.transmission.rows(); ++row) {
    for (std::size_t col = 0; col < truth.transmission.cols(); ++col) {
      const double rr = static_cast<double>(row), cc = static_cast<double>(col);
      if (!inside_polygon(bundle.polygon, rr, cc)) continue;
      double weight = 1.0;
      if (bundle.feather_px > 0.0) {
        weight = smoothstep(distance_to_boundary(bundle.polygon, rr, cc) / bundle.feather_px);
      }
      truth.transmission(row, col) *= std::exp(-bundle.mu_t * weight);
      truth.tensor.dxx(row, col) += weight * full.dxx;
      truth.tensor.dyy(row, col) += weight * full.dyy;
      truth.tensor.dxy(row, col) += weight * full.dxy;
    }
  }
}

}  // namespace

void SpeckleSpec::validate() const {
  if (!(grain_size_px >= 1.0) || !std::isfinite(grain_size_px))
    fail(ErrorCode::kDomain, "speckle grain_size_px must be >= 1");
  if (!(contrast > 0.0 && contrast <= 1.0))
    fail(ErrorCode::kDomain, "speckle contrast must lie in (0, 1]");
  if (!(mean_intensity > 0.0) || !std::isfinite(mean_intensity))
    fail(ErrorCode::kDomain, "speckle mean_intensity must be > 0");
}

ScalarField generate_speckle(const SpeckleSpec& spec, std::size_t rows, std::size_t cols) {
  spec.validate();
  if (rows < 32 || cols < 32) {
    fail(ErrorCode::kDimension, "speckle needs at least 32x32 pixels");
  }
  // Blurring white noise with sigma_b gives an autocovariance of width sqrt(2)*sigma_b.
  const double blur_sigma = spec.grain_size_px / std::numbers::sqrt2;
  const int radius = static_cast<int>(std::ceil(4.0 * blur_sigma));
  const std::vector<double> taps = gaussian_taps(blur_sigma, radius);

  const std::size_t pad = static_cast<std::size_t>(radius);
  const std::size_t prow = rows + 2 * pad, pcol = cols + 2 * pad;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(prow * pcol);
  for (double& v : noise) v = normal(rng);

  // horizontal pass on every padded row, keeping only the output columns
  std::vector<double> horizontal(prow * cols, 0.0);
  for (std::size_t r = 0; r < prow; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * noise[r * pcol + c + pad + i];
      horizontal[r * cols + c] = acc;
    }
  ScalarField z(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += taps[i + radius] * horizontal[(r + pad + i) * cols + c];
      z(r, c) = acc;
    }

  const double mean = z.mean();
  double var = 0.0;
  for (double v : z.values()) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(z.size()));

  // log-normal with E = mean_intensity and std/mean = contrast, always positive
  const double log_var = std::log1p(spec.contrast * spec.contrast);
  const double log_sd = std::sqrt(log_var);
  ScalarField out(rows, cols);
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = spec.mean_intensity * std::exp(log_sd * (z[i] - mean) / sd - 0.5 * log_var);
  }
  return out;
}

double cylinder_thickness(double radius, double offset) noexcept {
  const double h = radius * radius - offset * offset;
  return h > 0.0 ? 2.0 * std::sqrt(h) : 0.0;
}

void PhantomSpec::validate(std::size_t rows, std::size_t cols) const {
  const double max_row = static_cast<double>(rows) - 0.5;
  const double max_col = static_cast<double>(cols) - 0.5;
  auto in_grid = [&](const PixelPoint& p) {
    return p.row >= -0.5 && p.row <= max_row && p.col >= -0.5 && p.col <= max_col;
  };
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string tag = "phantom element " + std::to_string(i);
    if (const auto* cyl = std::get_if<Cylinder>(&elements[i])) {
      if (!(cyl->radius_px > 0.0)) fail(ErrorCode::kDomain, tag + ": radius_px must be > 0");
      if (!(cyl->mu_t >= 0.0)) fail(ErrorCode::kDomain, tag + ": mu_t must be >= 0");
      if (!std::isfinite(cyl->delta)) fail(ErrorCode::kDomain, tag + ": delta must be finite");
      if (!in_grid(cyl->center)) fail(ErrorCode::kDomain, tag + ": cylinder axis outside the grid");
    } else {
      const auto& b = std::get<FiberBundle>(elements[i]);
      if (b.polygon.size() < 3) fail(ErrorCode::kDomain, tag + ": polygon needs >= 3 vertices");
      if (!(b.orientation_deg >= 0.0 && b.orientation_deg < 180.0))
        fail(ErrorCode::kDomain, tag + ": orientation_deg must lie in [0, 180)");
      if (!(b.d_parallel >= 0.0)) fail(ErrorCode::kDomain, tag + ": d_parallel must be >= 0");
      if (!(b.d_perp >= b.d_parallel))
        fail(ErrorCode::kDomain, tag + ": d_perp must be >= d_parallel");
      if (!(b.mu_t >= 0.0)) fail(ErrorCode::kDomain, tag + ": mu_t must be >= 0");
      if (!(b.feather_px >= 0.0)) fail(ErrorCode::kDomain, tag + ": feather_px must be >= 0");
      for (const auto& p : b.polygon)
        if (!in_grid(p)) fail(ErrorCode::kDomain, tag + ": polygon vertex outside the grid");
    }
  }
}

PhantomSpec default_phantom(std::size_t rows, std::size_t cols) {
  if (rows < 128 || cols < 128) fail(ErrorCode::kDimension, "default phantom needs at least 128x128");
  const double sr = static_cast<double>(rows) / 512.0;
  const double sc = static_cast<double>(cols) / 512.0;
  const double s = std::min(sr, sc);
  PhantomSpec spec;
  spec.elements.push_back(Cylinder{{256.0 * sr, 96.0 * sc}, 20.0 * s, 90.0, 1.5e-6, 0.01});
  auto box = [&](double r0, double r1) {
    return std::vector<PixelPoint>{
        {r0 * sr, 200.0 * sc}, {r0 * sr, 470.0 * sc}, {r1 * sr, 470.0 * sc}, {r1 * sr, 200.0 * sc}};
  };
  FiberBundle upper{box(60.0, 230.0), 30.0, 0.13, 0.20, 0.3, 12.0 * s};
  FiberBundle lower{box(290.0, 460.0), 120.0, 0.13, 0.20, 0.3, 12.0 * s};
  spec.elements.emplace_back(upper);
  spec.elements.emplace_back(lower);
  return spec;
}

Mask polygon_mask(const std::vector<PixelPoint>& polygon, std::size_t rows, std::size_t cols,
                  double inset_px) {
  if (polygon.size() < 3) fail(ErrorCode::kDomain, "polygon needs >= 3 vertices");
  Mask out(rows, cols);
  for (std::size_t row = 0; row < rows; ++row)
    for (std::size_t col = 0; col < cols; ++col) {
      const double rr = static_cast<double>(row), cc = static_cast<double>(col);
      if (!inside_polygon(polygon, rr, cc)) continue;
      if (inset_px > 0.0 && distance_to_boundary(polygon, rr, cc) < inset_px) continue;
      out.set(row, col, true);
    }
  return out;
}

GroundTruth render_phantom(const PhantomSpec& phantom, std::size_t rows, std::size_t cols,
                           const Geometry& geometry) {
  geometry.validate();
  if (rows == 0 || cols == 0) fail(ErrorCode::kDimension, "phantom grid is empty");
  phantom.validate(rows, cols);
  GroundTruth truth{ScalarField(rows, cols, 1.0), ScalarField(rows, cols), ScalarField(rows, cols),
                    DiffusionTensorField(rows, cols)};
  for (const auto& element : phantom.elements) {
    if (const auto* cyl = std::get_if<Cylinder>(&element)) {
      render_cylinder(*cyl, geometry, truth);
    } else {
      render_bundle(std::get<FiberBundle>(element), truth);
    }
  }
  return truth;
}

ScalarField warp_bilinear(const ScalarField& in, const ScalarField& disp_x,
                          const ScalarField& disp_y) {
  require_same_shape(in, disp_x, "warp disp_x");
  require_same_shape(in, disp_y, "warp disp_y");
  const std::size_t rows = in.rows(), cols = in.cols();
  const double max_x = static_cast<double>(cols - 1);
  const double max_y = static_cast<double>(rows - 1);
  ScalarField out(rows, cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double dx = disp_x(r, c), dy = disp_y(r, c);
      if (dx == 0.0 && dy == 0.0) {
        out(r, c) = in(r, c);
        continue;
      }
      const double x = std::clamp(static_cast<double>(c) - dx, 0.0, max_x);
      const double y = std::clamp(static_cast<double>(r) - dy, 0.0, max_y);
      const std::size_t x0 = std::min(static_cast<std::size_t>(x), cols - 1);
      const std::size_t y0 = std::min(static_cast<std::size_t>(y), rows - 1);
      const std::size_t x1 = std::min(x0 + 1, cols - 1);
      const std::size_t y1 = std::min(y0 + 1, rows - 1);
      const double fx = x - static_cast<double>(x0);
      const double fy = y - static_cast<double>(y0);
      const double top = (1.0 - fx) * in(y0, x0) + fx * in(y0, x1);
      const double bottom = (1.0 - fx) * in(y1, x0) + fx * in(y1, x1);
      out(r, c) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

ScalarField apply_poisson_noise(const ScalarField& in, double photon_scale, std::uint64_t seed) {
  if (!(photon_scale > 0.0)) fail(ErrorCode::kDomain, "photon_scale must be > 0");
  std::mt19937_64 rng(seed);
  ScalarField out(in.rows(), in.cols());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double expected = in[i] * photon_scale;
    if (expected <= 0.0) continue;
    std::poisson_distribution<long long> draw(expected);
    out[i] = static_cast<double>(draw(rng)) / photon_scale;
  }
  return out;
}

SimulatedImage simulate_acquisition(const ScalarField& reference, const GroundTruth& truth,
                                    std::optional<double> photon_scale, std::uint64_t seed) {
  require_same_shape(reference, truth.transmission, "truth transmission");
  require_same_shape(reference, truth.disp_x, "truth disp_x");
  require_same_shape(reference, truth.disp_y, "truth disp_y");
  require_same_shape(reference, truth.tensor.dxx, "truth tensor");
  reference.require_finite("reference");

  SimulatedImage result;
  double max_shift = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    max_shift = std::max(max_shift, std::hypot(truth.disp_x[i], truth.disp_y[i]));
  }
  if (max_shift > 10.0) {
    result.warnings.push_back("displacement of " + std::to_string(max_shift) +
                              " px exceeds 10 px; the linear model is unlikely to hold");
  }

  ScalarField image = warp_bilinear(reference, truth.disp_x, truth.disp_y);
  image = anisotropic_blur(image, truth.tensor);
  for (std::size_t i = 0; i < image.size(); ++i) image[i] *= truth.transmission[i];
  if (photon_scale) image = apply_poisson_noise(image, *photon_scale, seed);
  result.image = std::move(image);
  return result;
}

}  // namespace mobi
