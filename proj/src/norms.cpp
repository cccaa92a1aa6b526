#include "spdelab/norms.hpp"

namespace spdelab {

namespace {

inline double pow_uint(double x, unsigned e) {
    double r = 1.0;
    while (e) {
        if (e & 1u) r *= x;
        x *= x;
        e >>= 1;
    }
    return r;
}

} // namespace

double lp_norm(const Field& f, double p) {
    if (!(p >= 1)) throw std::invalid_argument("lp_norm: p must be >= 1");
    double s = 0;
    if (p == 1.0) {
        for (double v : f.values) s += std::fabs(v);
    } else if (p == 2.0) {
        for (double v : f.values) s += v * v;
    } else if (p == std::floor(p) && p <= 64.0) {
        const unsigned e = unsigned(p);
        for (double v : f.values) s += pow_uint(std::fabs(v), e);
    } else {
        for (double v : f.values) s += std::pow(std::fabs(v), p);
    }
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

double bessel_norm(const Field& f, double gamma, double p) {
    if (gamma == 0.0) return lp_norm(f, p);
    return lp_norm(apply_multiplier(f, bessel_symbol(f.grid, gamma)), p);
}

double bessel_norm_cached(const Field& f, const std::vector<double>& symbol_values, double p,
                          SpectralWorkspace& ws, Field& scratch) {
    ws.multiply(f, symbol_values, scratch);
    return lp_norm(scratch, p);
}

} // namespace spdelab
