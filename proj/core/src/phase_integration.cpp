#include "mobi/phase_integration.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "mobi/error.hpp"

namespace mobi {

namespace {

// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

// Even extension of phi to 2R x 2C: x-gradients flip sign in the mirrored
// columns, y-gradients in the mirrored rows.
void mirror_extend(const ScalarField& g, bool odd_in_x, bool odd_in_y, double* out) {
  const std::size_t rows = g.rows(), cols = g.cols();
  const std::size_t ecols = 2 * cols;
  for (std::size_t r = 0; r < 2 * rows; ++r) {
    const bool flip_r = r >= rows;
    const std::size_t sr = flip_r ? 2 * rows - 1 - r : r;
    for (std::size_t c = 0; c < ecols; ++c) {
      const bool flip_c = c >= cols;
      const std::size_t sc = flip_c ? 2 * cols - 1 - c : c;
      double v = g(sr, sc);
      if ((flip_c && odd_in_x) != (flip_r && odd_in_y)) v = -v;
      out[r * ecols + c] = v;
    }
  }
}

}  // namespace

PhaseMap integrate_gradient(const ScalarField& gx, const ScalarField& gy, double pixel_pitch) {
  require_same_shape(gx, gy, "phase gradient gy");
  if (gx.empty()) fail(ErrorCode::kDimension, "gradient field is empty");
  if (!(pixel_pitch > 0.0)) fail(ErrorCode::kDomain, "pixel_pitch must be > 0");
  gx.require_finite("gradient gx");
  gy.require_finite("gradient gy");

  const std::size_t rows = gx.rows(), cols = gx.cols();
  const std::size_t erows = 2 * rows, ecols = 2 * cols;
  const std::size_t hcols = ecols / 2 + 1;
  const std::size_t real_n = erows * ecols, spec_n = erows * hcols;

  auto real_x = fftw_buffer<double>(real_n);
  auto real_y = fftw_buffer<double>(real_n);
  auto spec_x = fftw_buffer<fftw_complex>(spec_n);
  auto spec_y = fftw_buffer<fftw_complex>(spec_n);

  Plan forward_x, forward_y, inverse;
  {
    std::lock_guard lock(planner_mutex());
    const int n0 = static_cast<int>(erows), n1 = static_cast<int>(ecols);
    forward_x.reset(fftw_plan_dft_r2c_2d(n0, n1, real_x.get(), spec_x.get(), FFTW_ESTIMATE));
    forward_y.reset(fftw_plan_dft_r2c_2d(n0, n1, real_y.get(), spec_y.get(), FFTW_ESTIMATE));
    inverse.reset(fftw_plan_dft_c2r_2d(n0, n1, spec_x.get(), real_x.get(), FFTW_ESTIMATE));
  }

  mirror_extend(gx, true, false, real_x.get());
  mirror_extend(gy, false, true, real_y.get());
  fftw_execute(forward_x.get());
  fftw_execute(forward_y.get());

  // phi_hat = -i (kx gx_hat + ky gy_hat) / (kx^2 + ky^2); Nyquist rows/cols have
  // no odd derivative partner and are dropped.
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t r = 0; r < erows; ++r) {
    const std::ptrdiff_t fr = r <= erows / 2 ? static_cast<std::ptrdiff_t>(r)
                                             : static_cast<std::ptrdiff_t>(r) - static_cast<std::ptrdiff_t>(erows);
    const double ky = two_pi * static_cast<double>(fr) / (static_cast<double>(erows) * pixel_pitch);
    for (std::size_t c = 0; c < hcols; ++c) {
      const double kx = two_pi * static_cast<double>(c) / (static_cast<double>(ecols) * pixel_pitch);
      const std::size_t i = r * hcols + c;
      const bool nyquist = r == erows / 2 || c == ecols / 2;
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0 || nyquist) {
        spec_x[i][0] = 0.0;
        spec_x[i][1] = 0.0;
        continue;
      }
      const std::complex<double> gxh(spec_x[i][0], spec_x[i][1]);
      const std::complex<double> gyh(spec_y[i][0], spec_y[i][1]);
      const std::complex<double> phih =
          std::complex<double>(0.0, -1.0) * (kx * gxh + ky * gyh) / k2;
      spec_x[i][0] = phih.real();
      spec_x[i][1] = phih.imag();
    }
  }
  fftw_execute(inverse.get());

  PhaseMap out;
  out.phi = ScalarField(rows, cols);
  const double norm = 1.0 / static_cast<double>(real_n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out.phi(r, c) = real_x[r * ecols + c] * norm;
  const double mean = out.phi.mean();
  for (double& v : out.phi.values()) v -= mean;
  return out;
}

PhaseMap phase_from_displacement(const ScalarField& disp_x, const ScalarField& disp_y,
                                 const Geometry& geometry) {
  const RefractionMaps alpha = refraction_from_displacement(disp_x, disp_y, geometry);
  const double k = geometry.wavenumber_per_um();
  return integrate_gradient(k * alpha.alpha_x, k * alpha.alpha_y, geometry.pixel_pitch_um);
}

PhaseMap phase_from_retrieval(const RetrievalMaps& maps, const Geometry& geometry) {
  return phase_from_displacement(maps.disp_x, maps.disp_y, geometry);
}

}  // namespace mobi
