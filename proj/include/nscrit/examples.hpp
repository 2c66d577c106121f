#pragma once

#include "nscrit/space.hpp"

namespace nscrit {

/// u0 = (w_y, -w_x), w = sin(pi x)^(eps+1/2) sin(pi y)^(eps+1/2). Singular on
/// the boundary; evaluation there throws numeric-data.
VectorField initial_data_example1(double eps = 0.01);

/// Raw w = (y^(eps-1/2), x^(eps-1/2)); the run projects it onto X_h.
VectorField initial_data_example2(double eps = 0.01);

/// Smooth divergence-free field (psi_y, -psi_x), psi = sin^2(pi x) sin^2(pi y),
/// with its gradient.
VectorField manufactured_velocity();
GradientField manufactured_gradient();

}  // namespace nscrit
