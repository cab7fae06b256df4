#pragma once

#include "mobi/scalar_field.hpp"

namespace mobi {

// Finite-difference stencils in pixel units. All return the input shape.

/// d/dx along columns: central differences inside, one-sided on the first and
/// last column. Requires at least 3 columns.
ScalarField gradient_x(const ScalarField& f);
/// d/dy along rows, same scheme as gradient_x. Requires at least 3 rows.
ScalarField gradient_y(const ScalarField& f);

/// d2/dx2 with replicated-edge padding.
ScalarField second_derivative_x(const ScalarField& f);
/// d2/dy2 with replicated-edge padding.
ScalarField second_derivative_y(const ScalarField& f);

/// 5-point Laplacian with replicated-edge padding; equals
/// second_derivative_x + second_derivative_y.
ScalarField laplacian(const ScalarField& f);

/// gradient_x(gradient_y(f)).
ScalarField mixed_derivative_xy(const ScalarField& f);

}  // namespace mobi
