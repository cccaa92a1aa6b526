#include "spdelab/fourier.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace spdelab {

namespace {

// FFTW plan creation is not thread-safe; execution on distinct arrays is.
// Plans are created with FFTW_UNALIGNED so they can run on plain vectors.
struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

std::mutex plan_mutex;
std::map<std::pair<int, int>, PlanPair>& plan_cache() {
    static std::map<std::pair<int, int>, PlanPair> cache;
    return cache;
}

PlanPair get_plans(const GridSpec& g) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(g.dim, g.n);
    auto it = plan_cache().find(key);
    if (it != plan_cache().end()) return it->second;

    std::vector<std::complex<double>> scratch(g.size());
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    PlanPair plans;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (g.dim == 1) {
        plans.fwd = fftw_plan_dft_1d(g.n, p, p, FFTW_FORWARD, flags);
        plans.inv = fftw_plan_dft_1d(g.n, p, p, FFTW_BACKWARD, flags);
    } else {
        plans.fwd = fftw_plan_dft_2d(g.n, g.n, p, p, FFTW_FORWARD, flags);
        plans.inv = fftw_plan_dft_2d(g.n, g.n, p, p, FFTW_BACKWARD, flags);
    }
    plan_cache().emplace(key, plans);
    return plans;
}

// DFT bin -> signed mode number in [-N/2, N/2).
inline int signed_mode(int k, int n) { return k < n / 2 ? k : k - n; }

} // namespace

std::vector<double> tabulate_symbol(const GridSpec& g, const SpectralSymbol& symbol) {
    std::vector<double> out(g.size());
    const double base = M_PI / g.half_length; // frequency step
    double xi[2] = {0, 0};
    if (g.dim == 1) {
        for (int k = 0; k < g.n; ++k) {
            xi[0] = base * signed_mode(k, g.n);
            double s = symbol(xi, 1);
            if (!std::isfinite(s))
                throw std::invalid_argument("tabulate_symbol: symbol not finite at a grid frequency");
            out[k] = s;
        }
        return out;
    }
    for (int k1 = 0; k1 < g.n; ++k1) {
        xi[1] = base * signed_mode(k1, g.n);
        for (int k0 = 0; k0 < g.n; ++k0) {
            xi[0] = base * signed_mode(k0, g.n);
            double s = symbol(xi, 2);
            if (!std::isfinite(s))
                throw std::invalid_argument("tabulate_symbol: symbol not finite at a grid frequency");
            out[g.index(k0, k1)] = s;
        }
    }
    return out;
}

std::vector<double> bessel_symbol(const GridSpec& g, double gamma) {
    return tabulate_symbol(g, [gamma](const double* xi, int dim) {
        double q = 1.0 + xi[0] * xi[0] + (dim > 1 ? xi[1] * xi[1] : 0.0);
        return std::pow(q, 0.5 * gamma);
    });
}

std::vector<double> stencil_operator_symbol(const GridSpec& g,
                                            const std::vector<double>& a_constant) {
    const int d = g.dim;
    if ((d == 1 && a_constant.size() != 1) || (d == 2 && a_constant.size() != 4))
        throw std::invalid_argument("stencil_operator_symbol: expected dim x dim entries");
    const double h = g.spacing();
    return tabulate_symbol(g, [&, d, h](const double* xi, int) {
        double s = 0;
        for (int i = 0; i < d; ++i) {
            double w = 2.0 * std::sin(0.5 * xi[i] * h) / h;
            s += a_constant[i * d + i] * (-w * w);
        }
        if (d == 2) {
            double v0 = std::sin(xi[0] * h) / h;
            double v1 = std::sin(xi[1] * h) / h;
            s += -(a_constant[1] + a_constant[2]) * v0 * v1;
        }
        return s;
    });
}

SpectralWorkspace::SpectralWorkspace(const GridSpec& g) : grid_(g), buf_(g.size()) {
    get_plans(g); // warm the cache so later calls never plan
}

void SpectralWorkspace::forward() {
    auto plans = get_plans(grid_);
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fftw_execute_dft(plans.fwd, p, p);
}

void SpectralWorkspace::inverse() {
    auto plans = get_plans(grid_);
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fftw_execute_dft(plans.inv, p, p);
}

void SpectralWorkspace::multiply(const Field& f, const std::vector<double>& symbol_values,
                                 Field& out, double residue_tol) {
    if (!(f.grid == grid_))
        throw std::invalid_argument("SpectralWorkspace: field grid mismatch");
    if (symbol_values.size() != grid_.size())
        throw std::invalid_argument("SpectralWorkspace: symbol table size mismatch");
    const std::size_t sz = grid_.size();
    for (std::size_t i = 0; i < sz; ++i) buf_[i] = f.values[i];
    forward();
    for (std::size_t i = 0; i < sz; ++i) buf_[i] *= symbol_values[i];
    inverse();

    out.grid = grid_;
    out.values.resize(sz);
    const double scale = 1.0 / double(sz);
    double max_re = 0, max_im = 0;
    for (std::size_t i = 0; i < sz; ++i) {
        double re = buf_[i].real() * scale;
        max_re = std::max(max_re, std::fabs(re));
        max_im = std::max(max_im, std::fabs(buf_[i].imag()) * scale);
        out.values[i] = re;
    }
    if (max_im > residue_tol * std::max(max_re, 1e-300))
        throw std::runtime_error("dft_multiplier: imaginary residue exceeds tolerance "
                                 "(symbol not even/real?)");
}

void SpectralWorkspace::resolvent_solve(const Field& rhs, const std::vector<double>& a_symbol,
                                        double dt, Field& out) {
    if (!(rhs.grid == grid_) || a_symbol.size() != grid_.size())
        throw std::invalid_argument("resolvent_solve: shape mismatch");
    const std::size_t sz = grid_.size();
    for (std::size_t i = 0; i < sz; ++i) buf_[i] = rhs.values[i];
    forward();
    for (std::size_t i = 0; i < sz; ++i) buf_[i] /= (1.0 - dt * a_symbol[i]);
    inverse();
    out.grid = grid_;
    out.values.resize(sz);
    const double scale = 1.0 / double(sz);
    for (std::size_t i = 0; i < sz; ++i) out.values[i] = buf_[i].real() * scale;
}

Field apply_multiplier(const Field& f, const std::vector<double>& symbol_values) {
    SpectralWorkspace ws(f.grid);
    Field out;
    ws.multiply(f, symbol_values, out);
    return out;
}

Field dft_multiplier(const Field& f, const SpectralSymbol& symbol) {
    return apply_multiplier(f, tabulate_symbol(f.grid, symbol));
}

} // namespace spdelab
