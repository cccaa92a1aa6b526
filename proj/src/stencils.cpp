#include "spdelab/stencils.hpp"

namespace spdelab {

namespace {

void check_axis(const GridSpec& g, int axis) {
    if (axis < 0 || axis >= g.dim)
        throw std::invalid_argument("stencil: axis out of range for grid dimension");
}

} // namespace

Field central_gradient(const Field& f, int axis) {
    const GridSpec& g = f.grid;
    check_axis(g, axis);
    Field out(g);
    const int n = g.n;
    const double inv2h = 1.0 / (2.0 * g.spacing());
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            const int ip = i + 1 == n ? 0 : i + 1;
            const int im = i == 0 ? n - 1 : i - 1;
            out.values[i] = (f.values[ip] - f.values[im]) * inv2h;
        }
        return out;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            std::size_t p, m;
            if (axis == 0) {
                p = g.index(i + 1 == n ? 0 : i + 1, j);
                m = g.index(i == 0 ? n - 1 : i - 1, j);
            } else {
                p = g.index(i, j + 1 == n ? 0 : j + 1);
                m = g.index(i, j == 0 ? n - 1 : j - 1);
            }
            out.values[g.index(i, j)] = (f.values[p] - f.values[m]) * inv2h;
        }
    }
    return out;
}

Field second_difference(const Field& f, int axis) {
    const GridSpec& g = f.grid;
    check_axis(g, axis);
    Field out(g);
    const int n = g.n;
    const double h = g.spacing();
    const double invh2 = 1.0 / (h * h);
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i) {
            const int ip = i + 1 == n ? 0 : i + 1;
            const int im = i == 0 ? n - 1 : i - 1;
            out.values[i] = (f.values[ip] - 2.0 * f.values[i] + f.values[im]) * invh2;
        }
        return out;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            std::size_t p, m;
            if (axis == 0) {
                p = g.index(i + 1 == n ? 0 : i + 1, j);
                m = g.index(i == 0 ? n - 1 : i - 1, j);
            } else {
                p = g.index(i, j + 1 == n ? 0 : j + 1);
                m = g.index(i, j == 0 ? n - 1 : j - 1);
            }
            const std::size_t c = g.index(i, j);
            out.values[c] = (f.values[p] - 2.0 * f.values[c] + f.values[m]) * invh2;
        }
    }
    return out;
}

Field cross_difference(const Field& f, int axis_i, int axis_j) {
    const GridSpec& g = f.grid;
    check_axis(g, axis_i);
    check_axis(g, axis_j);
    if (g.dim != 2 || axis_i == axis_j)
        throw std::invalid_argument("cross_difference: needs two distinct axes in d=2");
    Field out(g);
    const int n = g.n;
    const double h = g.spacing();
    const double inv4h2 = 1.0 / (4.0 * h * h);
    for (int j = 0; j < n; ++j) {
        const int jp = j + 1 == n ? 0 : j + 1;
        const int jm = j == 0 ? n - 1 : j - 1;
        for (int i = 0; i < n; ++i) {
            const int ip = i + 1 == n ? 0 : i + 1;
            const int im = i == 0 ? n - 1 : i - 1;
            out.values[g.index(i, j)] =
                (f.values[g.index(ip, jp)] - f.values[g.index(ip, jm)] -
                 f.values[g.index(im, jp)] + f.values[g.index(im, jm)]) *
                inv4h2;
        }
    }
    return out;
}

} // namespace spdelab
