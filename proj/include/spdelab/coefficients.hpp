// Coefficient fields of the drift operator
//
//     a^ij u_{x^i x^j} + b^i u_{x^i} + c u + bbar^i (taming(u))_{x^i},
//
// their structural validation, and the integrable cosh weight used by the
// weighted-mass checks.
#pragma once

#include <optional>
#include <string>

#include "spdelab/grid.hpp"
#include "spdelab/stencils.hpp"

namespace spdelab {

// bbar^i is independent of coordinate i, so it lives on the complementary
// grid: a single value in d=1, a line of N values (indexed by the other
// coordinate) in d=2.
struct AxisProfile {
    int axis = 0;
    std::vector<double> values;

    static AxisProfile constant(const GridSpec& g, int axis, double value) {
        AxisProfile p;
        p.axis = axis;
        p.values.assign(g.dim == 1 ? 1 : std::size_t(g.n), value);
        return p;
    }
    double at_flat(const GridSpec& g, std::size_t flat) const {
        if (g.dim == 1) return values[0];
        const std::size_t other = axis == 0 ? flat / g.n : flat % g.n;
        return values[other];
    }
};

// Optional scalar time modulation of the lower-order coefficients b, c, bbar;
// the leading coefficient a stays frozen so its cached solve remains valid.
struct TimeModulation {
    double amplitude = 0.0;
    double frequency = 1.0;
    double factor(double t) const {
        return 1.0 + amplitude * std::sin(2.0 * M_PI * frequency * t);
    }
    double max_factor() const { return 1.0 + std::fabs(amplitude); }
};

struct CoefficientSet {
    GridSpec grid;
    std::vector<Field> a; // dim*dim entries, row-major, symmetric
    std::vector<Field> b; // dim entries
    Field c;
    std::vector<AxisProfile> b_bar; // dim entries
    double K = 1.0;
    double lambda = 1.0;
    TimeModulation modulation;

    const Field& a_entry(int i, int j) const { return a[std::size_t(i) * grid.dim + j]; }
    bool a_spatially_constant() const;
    // Constant a entries (valid only when a_spatially_constant()).
    std::vector<double> a_constants() const;

    static CoefficientSet constant(const GridSpec& g, const std::vector<double>& a_entries,
                                   const std::vector<double>& b_entries, double c_value,
                                   const std::vector<double>& b_bar_entries, double K,
                                   double lambda);
};

// sum_ij a^ij(x) D^2_ij f with the symmetric stencil.
Field laplacian_like(const Field& f, const CoefficientSet& coeffs);

struct CheckEntry {
    std::string name;
    bool pass = false;
    double statistic = 0; // measured value
    double bound = 0;     // admissible bound
    std::string witness;  // lattice point / direction on failure, empty otherwise
};

struct ValidationReport {
    std::vector<CheckEntry> entries;
    double minimal_passing_K = 0; // smallest K for which every K-check passes
    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    std::string to_json() const;
};

ValidationReport validate_assumptions(const CoefficientSet& coeffs);

// Structural check used when bbar arrives as a full field: value must not
// vary along its own axis. Returns a witness description on failure.
std::optional<std::string> axis_independence_violation(const Field& f, int axis,
                                                       double rel_tol = 1e-14);
AxisProfile axis_profile_from_field(const Field& f, int axis);

struct PsiWeight {
    double k = 1.0;
    Field values; // 1/cosh(|x|/k) with the minimal-image radius
};

PsiWeight psi_weight(const GridSpec& grid, double k);

// Pointwise verification, with discrete derivatives and worst-case taming
// factor over |v| <= 2m, of
//   (a^ij psi)_{x^i x^j} - (b^i psi)_{x^i} - bbar^i v^lambda h_m(v) psi_{x^i}
//     + (c - 4K) psi   <=   K psi [ 2/k^2 + (3 + (2m)^lambda)/k - 1 ].
struct InequalityReport {
    bool pass = false;
    double k = 0;
    double m = 0;
    double bracket = 0;       // 2/k^2 + (3+(2m)^lambda)/k - 1
    double threshold_k = 0;   // bracket root: k >= threshold  =>  bracket <= 0
    double min_margin = 0;    // min over lattice of rhs - lhs
    std::size_t worst_index = 0;
    std::string to_json() const;
};

InequalityReport verify_psi_inequality(const CoefficientSet& coeffs, double k, double m);

// Analytic root of 2/k^2 + (3 + (2m)^lambda)/k - 1 = 0.
double psi_bracket_threshold(double m, double lambda);

} // namespace spdelab
