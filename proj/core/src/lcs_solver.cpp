#include "mobi/lcs_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mobi/error.hpp"
#include "mobi/stencils.hpp"
#include "pixel_solver.hpp"

namespace mobi {

void SolverOptions::validate() const {
  if (!(tikhonov_lambda >= 0.0) || !std::isfinite(tikhonov_lambda))
    fail(ErrorCode::kDomain, "tikhonov_lambda must be >= 0");
  if (!(min_transmission > 0.0 && min_transmission < 1.0))
    fail(ErrorCode::kDomain, "min_transmission must lie in (0, 1)");
}

ScalarColumns scalar_columns(const ScalarField& reference) {
  return {gradient_x(reference), gradient_y(reference), laplacian(reference)};
}

PixelSystem assemble_pixel_system(const AcquisitionSet& acq,
                                  const std::vector<ScalarColumns>& columns, std::size_t row,
                                  std::size_t col) {
  if (columns.size() != acq.count()) {
    fail(ErrorCode::kShapeMismatch, "one column set per acquisition pair is required");
  }
  if (row >= acq.rows() || col >= acq.cols()) fail(ErrorCode::kDomain, "pixel outside the grid");
  PixelSystem sys;
  sys.rows = acq.count();
  sys.cols = 4;
  sys.matrix.reserve(sys.rows * 4);
  for (std::size_t k = 0; k < acq.count(); ++k) {
    sys.matrix.push_back(acq.pairs[k].sample(row, col));
    sys.matrix.push_back(columns[k].grad_x(row, col));
    sys.matrix.push_back(columns[k].grad_y(row, col));
    sys.matrix.push_back(-columns[k].laplacian(row, col));
    sys.rhs.push_back(acq.pairs[k].reference(row, col));
  }
  return sys;
}

PixelSystem assemble_pixel_system(const AcquisitionSet& acq, std::size_t row, std::size_t col) {
  std::vector<ScalarColumns> columns;
  for (const auto& pair : acq.pairs) columns.push_back(scalar_columns(pair.reference));
  return assemble_pixel_system(acq, columns, row, col);
}

RetrievalMaps solve_scalar(const AcquisitionSet& acq, const SolverOptions& opts) {
  opts.validate();
  if (acq.count() < 4) {
    fail(ErrorCode::kInsufficientMeasurements,
         "scalar retrieval has 4 unknowns and needs at least 4 membrane positions, got " +
             std::to_string(acq.count()));
  }
  acq.validate();

  std::vector<ScalarColumns> columns;
  columns.reserve(acq.count());
  for (const auto& pair : acq.pairs) columns.push_back(scalar_columns(pair.reference));

  detail::ColumnSource source;
  source.unknowns = 4;
  source.fill = [&](std::size_t k, std::size_t i, double* out) {
    out[0] = acq.pairs[k].sample[i];
    out[1] = columns[k].grad_x[i];
    out[2] = columns[k].grad_y[i];
    out[3] = -columns[k].laplacian[i];
  };
  detail::PixelFits fits = detail::solve_pixels(acq, source, opts);

  RetrievalMaps maps;
  maps.transmission = ScalarField(acq.rows(), acq.cols());
  for (std::size_t i = 0; i < maps.transmission.size(); ++i) {
    maps.transmission[i] = detail::transmission_from_a(fits.unknowns[0][i], opts.min_transmission);
  }
  maps.disp_x = std::move(fits.unknowns[1]);
  maps.disp_y = std::move(fits.unknowns[2]);
  maps.diffusion = std::move(fits.unknowns[3]);
  if (opts.clamp_negative_diffusion) {
    for (double& d : maps.diffusion.values()) d = std::max(d, 0.0);
  }
  maps.residual_rms = std::move(fits.residual_rms);
  maps.condition = std::move(fits.condition);
  return maps;
}

RefractionMaps refraction_from_displacement(const ScalarField& disp_x, const ScalarField& disp_y,
                                            const Geometry& geometry) {
  geometry.validate();
  require_same_shape(disp_x, disp_y, "refraction disp_y");
  const double scale = geometry.pixel_pitch_um / geometry.z2_um();
  return {scale * disp_x, scale * disp_y};
}

RefractionMaps refraction_from_displacement(const RetrievalMaps& maps, const Geometry& geometry) {
  return refraction_from_displacement(maps.disp_x, maps.disp_y, geometry);
}

}  // namespace mobi
