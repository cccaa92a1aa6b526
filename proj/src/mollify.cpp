#include "spdelab/mollify.hpp"

namespace spdelab {

namespace {

inline double bump(double r2) {
    if (r2 >= 1.0) return 0.0;
    const double t = 1.0 - r2;
    return t * t * t;
}

} // namespace

MollifierKernel make_mollifier(const GridSpec& g, double eps) {
    if (!(eps > 0)) throw std::invalid_argument("mollify: eps must be positive");
    const double h = g.spacing();
    int radius = int(eps / h); // support |x| < eps
    if (radius * 1.0 * h >= eps) radius = std::max(radius - 1, 0);
    radius = std::min(radius, g.n / 2 - 1);

    MollifierKernel k;
    k.radius_taps = radius;
    const int w = 2 * radius + 1;
    const double inv_eps2 = 1.0 / (eps * eps);
    double total = 0;
    if (g.dim == 1) {
        k.weights.resize(w);
        for (int i = -radius; i <= radius; ++i) {
            double v = bump(i * h * i * h * inv_eps2);
            k.weights[i + radius] = v;
            total += v;
        }
    } else {
        k.weights.resize(std::size_t(w) * w);
        for (int j = -radius; j <= radius; ++j)
            for (int i = -radius; i <= radius; ++i) {
                double r2 = (i * h * i * h + j * h * j * h) * inv_eps2;
                double v = bump(r2);
                k.weights[std::size_t(i + radius) + std::size_t(w) * (j + radius)] = v;
                total += v;
            }
    }
    for (double& v : k.weights) v /= total;
    return k;
}

Field mollify(const Field& f, double eps) {
    const GridSpec& g = f.grid;
    MollifierKernel kernel = make_mollifier(g, eps);
    const int r = kernel.radius_taps;
    if (r == 0) return f;

    Field out(g);
    const int n = g.n;
    const int w = 2 * r + 1;
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int o = -r; o <= r; ++o)
                acc += kernel.weights[o + r] * f.values[g.wrap(i - o)];
            out.values[i] = acc;
        }
        return out;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int oj = -r; oj <= r; ++oj) {
                const int jj = g.wrap(j - oj);
                const double* row = &kernel.weights[std::size_t(w) * (oj + r)];
                for (int oi = -r; oi <= r; ++oi)
                    acc += row[oi + r] * f.values[g.index(g.wrap(i - oi), jj)];
            }
            out.values[g.index(i, j)] = acc;
        }
    }
    return out;
}

} // namespace spdelab
