// Periodic lattice on the torus [-L, L)^dim and the scalar fields living on it.
//
// Linear index convention: axis 0 has stride 1, axis 1 has stride N
// (so a d=2 field is a row-major array of N rows of N contiguous values).
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdelab {

struct GridSpec {
    int dim = 1;             // 1 or 2
    int n = 256;             // points per axis, power of two, >= 8
    double half_length = 16; // L; domain is [-L, L)^dim

    GridSpec() = default;
    GridSpec(int dim_, int n_, double half_length_)
        : dim(dim_), n(n_), half_length(half_length_) {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("GridSpec: dim must be 1 or 2");
        if (n < 8 || (n & (n - 1)) != 0)
            throw std::invalid_argument("GridSpec: n must be a power of two >= 8");
        if (!(half_length > 0))
            throw std::invalid_argument("GridSpec: half_length must be positive");
    }

    // h = 2L/N is exact in binary floating point for power-of-two N.
    double spacing() const { return 2.0 * half_length / n; }
    double cell_volume() const { return dim == 1 ? spacing() : spacing() * spacing(); }
    std::size_t size() const { return dim == 1 ? std::size_t(n) : std::size_t(n) * n; }

    double coord(int i) const { return -half_length + i * spacing(); }

    std::size_t index(int i0, int i1 = 0) const {
        return std::size_t(i0) + std::size_t(n) * i1;
    }
    int wrap(int i) const {
        int r = i % n;
        return r < 0 ? r + n : r;
    }
    // Minimal-image distance from the origin, used by the cosh weight.
    double min_image_radius(int i0, int i1 = 0) const {
        double x = coord(i0);
        if (dim == 1) return std::fabs(x);
        double y = coord(i1);
        return std::sqrt(x * x + y * y);
    }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && n == o.n && half_length == o.half_length;
    }
};

struct Field {
    GridSpec grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
    Field(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != g.size())
            throw std::invalid_argument("Field: value count does not match grid");
    }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    double& at(int i0, int i1 = 0) { return values[grid.index(i0, i1)]; }
    double at(int i0, int i1 = 0) const { return values[grid.index(i0, i1)]; }

    template <class F>
    static Field sample(const GridSpec& g, F&& f) {
        Field out(g);
        if (g.dim == 1) {
            for (int i = 0; i < g.n; ++i) out.values[i] = f(g.coord(i), 0.0);
        } else {
            for (int j = 0; j < g.n; ++j)
                for (int i = 0; i < g.n; ++i)
                    out.values[g.index(i, j)] = f(g.coord(i), g.coord(j));
        }
        return out;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
    double max_abs() const {
        double m = 0;
        for (double v : values) m = std::max(m, std::fabs(v));
        return m;
    }
    double min_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::min(m, v);
        return m;
    }
    double max_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::max(m, v);
        return m;
    }
    // Sum of values times the cell volume (the lattice integral).
    double integral() const {
        double s = 0;
        for (double v : values) s += v;
        return s * grid.cell_volume();
    }
};

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

} // namespace spdelab
