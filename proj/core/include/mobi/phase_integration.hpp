#pragma once

#include "mobi/lcs_solver.hpp"
#include "mobi/scalar_field.hpp"

namespace mobi {

struct PhaseMap {
  ScalarField phi;  // radians
  bool mean_zero_gauge = true;
};

/// Least-squares integration of a gradient field (rad per length unit of
/// `pixel_pitch`) by the Fourier method on the mirror-extended domain.
/// The constant mode is zeroed; the result has zero mean.
PhaseMap integrate_gradient(const ScalarField& gx, const ScalarField& gy, double pixel_pitch);

/// Displacement (pixels) -> refraction angle -> phase gradient k * alpha -> phase.
PhaseMap phase_from_displacement(const ScalarField& disp_x, const ScalarField& disp_y,
                                 const Geometry& geometry);
PhaseMap phase_from_retrieval(const RetrievalMaps& maps, const Geometry& geometry);

}  // namespace mobi
