// Periodic mollification with the polynomial bump (1 - |x|^2)^3 on |x| < 1,
// rescaled to radius eps and normalized by quadrature on the grid so that
// convolution preserves the lattice integral exactly (up to roundoff).
#pragma once

#include "spdelab/grid.hpp"

namespace spdelab {

// Tap weights of the normalized kernel, indexed by lattice offset; sums to 1.
// radius_taps is the number of offsets on each side of the center.
struct MollifierKernel {
    int radius_taps = 0;
    std::vector<double> weights; // (2*radius_taps+1)^dim entries, axis-0 contiguous
};

MollifierKernel make_mollifier(const GridSpec& grid, double eps);

// Convolve with the eps-mollifier. eps <= 0 is an error; eps below the grid
// spacing degenerates to the identity.
Field mollify(const Field& f, double eps);

} // namespace spdelab
