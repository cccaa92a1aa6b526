// Periodic finite-difference stencils. All second-order central differences;
// the cross derivative is the iterated central difference, which keeps the
// discrete summation-by-parts identities exact.
#pragma once

#include "spdelab/grid.hpp"

namespace spdelab {

// (f(x + h e_axis) - f(x - h e_axis)) / 2h with periodic wraparound.
Field central_gradient(const Field& f, int axis);

// (f(x + h e_axis) - 2 f(x) + f(x - h e_axis)) / h^2.
Field second_difference(const Field& f, int axis);

// D_i D_j f for i != j via iterated central differences:
// (f(++) - f(+-) - f(-+) + f(--)) / (4 h^2).
Field cross_difference(const Field& f, int axis_i, int axis_j);

} // namespace spdelab
