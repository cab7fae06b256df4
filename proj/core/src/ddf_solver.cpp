#include "mobi/ddf_solver.hpp"

#include <string>

#include "mobi/error.hpp"
#include "mobi/stencils.hpp"
#include "pixel_solver.hpp"

namespace mobi {

namespace {

struct TensorColumns {
  ScalarField grad_x;
  ScalarField grad_y;
  ScalarField dxx;
  ScalarField dyy;
  ScalarField dxy;
};

}  // namespace

TensorRetrieval solve_tensor(const AcquisitionSet& acq, const SolverOptions& opts) {
  opts.validate();
  if (acq.count() < 6) {
    fail(ErrorCode::kInsufficientMeasurements,
         "tensor retrieval has 6 unknowns and needs at least 6 membrane positions, got " +
             std::to_string(acq.count()));
  }
  acq.validate();

  std::vector<TensorColumns> columns;
  columns.reserve(acq.count());
  for (const auto& pair : acq.pairs) {
    const ScalarField& ref = pair.reference;
    columns.push_back({gradient_x(ref), gradient_y(ref), second_derivative_x(ref),
                       second_derivative_y(ref), mixed_derivative_xy(ref)});
  }

  detail::ColumnSource source;
  source.unknowns = 6;
  source.fill = [&](std::size_t k, std::size_t i, double* out) {
    const TensorColumns& c = columns[k];
    out[0] = acq.pairs[k].sample[i];
    out[1] = c.grad_x[i];
    out[2] = c.grad_y[i];
    out[3] = -c.dxx[i];
    out[4] = -c.dyy[i];
    out[5] = -c.dxy[i];
  };
  detail::PixelFits fits = detail::solve_pixels(acq, source, opts);

  const std::size_t rows = acq.rows(), cols = acq.cols();
  TensorRetrieval out;
  out.transmission = ScalarField(rows, cols);
  for (std::size_t i = 0; i < out.transmission.size(); ++i) {
    out.transmission[i] = detail::transmission_from_a(fits.unknowns[0][i], opts.min_transmission);
  }
  out.disp_x = std::move(fits.unknowns[1]);
  out.disp_y = std::move(fits.unknowns[2]);
  out.tensor.dxx = std::move(fits.unknowns[3]);
  out.tensor.dyy = std::move(fits.unknowns[4]);
  out.tensor.dxy = std::move(fits.unknowns[5]);
  out.residual_rms = std::move(fits.residual_rms);
  out.condition = std::move(fits.condition);
  out.clamped = Mask(rows, cols);
  if (opts.clamp_negative_diffusion) {
    for (std::size_t i = 0; i < out.tensor.dxx.size(); ++i) {
      TensorComponents t{out.tensor.dxx[i], out.tensor.dyy[i], out.tensor.dxy[i]};
      if (clamp_to_psd(t)) {
        out.tensor.dxx[i] = t.dxx;
        out.tensor.dyy[i] = t.dyy;
        out.tensor.dxy[i] = t.dxy;
        out.clamped.set(i, true);
      }
    }
  }
  return out;
}

}  // namespace mobi
