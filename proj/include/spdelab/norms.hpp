// Lattice L_p and Bessel-potential norms.
#pragma once

#include "spdelab/fourier.hpp"
#include "spdelab/grid.hpp"

namespace spdelab {

// (sum_x |f(x)|^p h^d)^(1/p); integer p uses exponentiation by squaring.
double lp_norm(const Field& f, double p);

// L_p norm of the multiplier image under (1 + |xi|^2)^(gamma/2).
double bessel_norm(const Field& f, double gamma, double p);

// Variant for hot loops: reuses a caller-held workspace and symbol table.
double bessel_norm_cached(const Field& f, const std::vector<double>& bessel_symbol_values,
                          double p, SpectralWorkspace& ws, Field& scratch);

} // namespace spdelab
