// Discrete Fourier machinery on the periodic grid.
//
// Frequencies are xi_n = pi * n / L per axis with n in [-N/2, N/2). A
// multiplier is applied diagonally in Fourier space; for real input and an
// even real symbol the result is real up to roundoff, and a residual
// imaginary part above 1e-9 (relative to the real max-norm) is treated as a
// symbol bug.
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "spdelab/grid.hpp"

namespace spdelab {

// symbol(xi) where xi has grid.dim components. Must be finite at every
// discrete frequency.
using SpectralSymbol = std::function<double(const double* xi, int dim)>;

// Tabulated symbol values over the full DFT index set, in the same linear
// layout as Field values (axis 0 contiguous, unshifted DFT ordering).
std::vector<double> tabulate_symbol(const GridSpec& grid, const SpectralSymbol& symbol);

// Forward DFT, pointwise multiply by the tabulated symbol, inverse DFT,
// discard the imaginary residue after checking it is small.
Field apply_multiplier(const Field& f, const std::vector<double>& symbol_values);

// Convenience overload that tabulates the symbol on the fly.
Field dft_multiplier(const Field& f, const SpectralSymbol& symbol);

// Bessel multiplier (1 + |xi|^2)^(gamma/2).
std::vector<double> bessel_symbol(const GridSpec& grid, double gamma);

// Symbol of the second-difference operator sum_ij a^ij D_ij for spatially
// constant a: diagonal entries contribute -(4/h^2) sin^2(xi_i h / 2), cross
// terms -(sin(xi_i h) sin(xi_j h)) / h^2.
std::vector<double> stencil_operator_symbol(const GridSpec& grid,
                                            const std::vector<double>& a_constant);

// One complex workspace per caller; FFTW plans are cached per grid shape and
// shared, plan creation is serialized internally.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const GridSpec& grid);

    // out[i] = IDFT( symbol .* DFT(f) )[i], real part; imaginary residue
    // above tol * max|real| throws.
    void multiply(const Field& f, const std::vector<double>& symbol_values, Field& out,
                  double residue_tol = 1e-9);

    // Solve (I - dt*A) u = rhs where A has the given (real, nonpositive)
    // symbol; denominators are 1 - dt*symbol >= 1.
    void resolvent_solve(const Field& rhs, const std::vector<double>& a_symbol, double dt,
                         Field& out);

    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_;
    std::vector<std::complex<double>> buf_;
    void forward();
    void inverse();
};

} // namespace spdelab
