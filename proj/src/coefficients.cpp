#include "spdelab/coefficients.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "spdelab/cutoff.hpp"

namespace spdelab {

namespace {

bool field_constant(const Field& f) {
    if (f.values.empty()) return true;
    const double v0 = f.values[0];
    for (double v : f.values)
        if (v != v0) return false;
    return true;
}

std::string point_string(const GridSpec& g, std::size_t flat) {
    std::ostringstream os;
    if (g.dim == 1) {
        os << "i=" << flat << " x=" << g.coord(int(flat));
    } else {
        const int i = int(flat % g.n), j = int(flat / g.n);
        os << "i=" << i << " j=" << j << " x=(" << g.coord(i) << "," << g.coord(j) << ")";
    }
    return os.str();
}

// sup|f| + sum_i sup|D_i f| + sum_ij sup|D_ij f|, all discrete.
double c2_norm_discrete(const Field& f) {
    double out = f.max_abs();
    const int d = f.grid.dim;
    for (int i = 0; i < d; ++i) out += central_gradient(f, i).max_abs();
    for (int i = 0; i < d; ++i) out += second_difference(f, i).max_abs();
    if (d == 2) out += 2.0 * cross_difference(f, 0, 1).max_abs();
    return out;
}

// Periodic 1d differences of a bbar line profile.
double c2_norm_profile(const AxisProfile& p, double h) {
    double sup = 0;
    for (double v : p.values) sup = std::max(sup, std::fabs(v));
    if (p.values.size() < 2) return sup;
    const int n = int(p.values.size());
    double d1 = 0, d2 = 0;
    for (int i = 0; i < n; ++i) {
        const int ip = i + 1 == n ? 0 : i + 1;
        const int im = i == 0 ? n - 1 : i - 1;
        d1 = std::max(d1, std::fabs((p.values[ip] - p.values[im]) / (2 * h)));
        d2 = std::max(d2, std::fabs((p.values[ip] - 2 * p.values[i] + p.values[im]) / (h * h)));
    }
    return sup + d1 + d2;
}

struct EigenPair {
    double lo, hi;
    double vlo[2], vhi[2];
};

EigenPair symmetric_eigen(double p, double q, double r) {
    EigenPair e{};
    const double mean = 0.5 * (p + r);
    const double disc = std::sqrt(0.25 * (p - r) * (p - r) + q * q);
    e.lo = mean - disc;
    e.hi = mean + disc;
    auto unit_vec = [&](double lam, double* v) {
        double vx = q, vy = lam - p;
        if (std::fabs(vx) + std::fabs(vy) < 1e-300) { vx = 1; vy = 0; }
        const double nrm = std::sqrt(vx * vx + vy * vy);
        v[0] = vx / nrm;
        v[1] = vy / nrm;
    };
    unit_vec(e.lo, e.vlo);
    unit_vec(e.hi, e.vhi);
    return e;
}

} // namespace

bool CoefficientSet::a_spatially_constant() const {
    for (const auto& f : a)
        if (!field_constant(f)) return false;
    return true;
}

std::vector<double> CoefficientSet::a_constants() const {
    std::vector<double> out;
    out.reserve(a.size());
    for (const auto& f : a) out.push_back(f.values[0]);
    return out;
}

CoefficientSet CoefficientSet::constant(const GridSpec& g, const std::vector<double>& a_entries,
                                        const std::vector<double>& b_entries, double c_value,
                                        const std::vector<double>& b_bar_entries, double K,
                                        double lambda) {
    const int d = g.dim;
    if (a_entries.size() != std::size_t(d) * d || b_entries.size() != std::size_t(d) ||
        b_bar_entries.size() != std::size_t(d))
        throw std::invalid_argument("CoefficientSet::constant: entry count mismatch");
    CoefficientSet out;
    out.grid = g;
    for (double v : a_entries) out.a.emplace_back(g, v);
    for (double v : b_entries) out.b.emplace_back(g, v);
    out.c = Field(g, c_value);
    for (int i = 0; i < d; ++i) out.b_bar.push_back(AxisProfile::constant(g, i, b_bar_entries[i]));
    out.K = K;
    out.lambda = lambda;
    return out;
}

Field laplacian_like(const Field& f, const CoefficientSet& coeffs) {
    require_same_grid(f, coeffs.a_entry(0, 0), "laplacian_like");
    const GridSpec& g = f.grid;
    Field out(g);
    const int d = g.dim;
    for (int i = 0; i < d; ++i) {
        Field dii = second_difference(f, i);
        const Field& aii = coeffs.a_entry(i, i);
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] += aii.values[p] * dii.values[p];
    }
    if (d == 2) {
        Field dij = cross_difference(f, 0, 1);
        const Field& a01 = coeffs.a_entry(0, 1);
        const Field& a10 = coeffs.a_entry(1, 0);
        for (std::size_t p = 0; p < out.size(); ++p)
            out.values[p] += (a01.values[p] + a10.values[p]) * dij.values[p];
    }
    return out;
}

ValidationReport validate_assumptions(const CoefficientSet& coeffs) {
    ValidationReport report;
    const GridSpec& g = coeffs.grid;
    const int d = g.dim;
    const double K = coeffs.K;
    const double tol = 1e-12;

    // Symmetry of a (d=2 only).
    if (d == 2) {
        double asym = 0;
        std::size_t worst = 0;
        const Field& a01 = coeffs.a_entry(0, 1);
        const Field& a10 = coeffs.a_entry(1, 0);
        for (std::size_t p = 0; p < g.size(); ++p) {
            double dlt = std::fabs(a01.values[p] - a10.values[p]);
            if (dlt > asym) { asym = dlt; worst = p; }
        }
        CheckEntry e{"a symmetry", asym <= tol, asym, tol, ""};
        if (!e.pass) e.witness = point_string(g, worst);
        report.entries.push_back(e);
    }

    // Ellipticity: eigenvalues of a(x) are authoritative for d <= 2; the
    // probe directions only serve to produce a readable witness.
    {
        double lo_global = 1e300, hi_global = -1e300;
        std::size_t lo_at = 0, hi_at = 0;
        double lo_dir[2] = {1, 0}, hi_dir[2] = {1, 0};
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (d == 1) {
                const double v = coeffs.a_entry(0, 0).values[p];
                if (v < lo_global) { lo_global = v; lo_at = p; }
                if (v > hi_global) { hi_global = v; hi_at = p; }
            } else {
                EigenPair e = symmetric_eigen(coeffs.a_entry(0, 0).values[p],
                                              0.5 * (coeffs.a_entry(0, 1).values[p] +
                                                     coeffs.a_entry(1, 0).values[p]),
                                              coeffs.a_entry(1, 1).values[p]);
                if (e.lo < lo_global) {
                    lo_global = e.lo; lo_at = p;
                    lo_dir[0] = e.vlo[0]; lo_dir[1] = e.vlo[1];
                }
                if (e.hi > hi_global) {
                    hi_global = e.hi; hi_at = p;
                    hi_dir[0] = e.vhi[0]; hi_dir[1] = e.vhi[1];
                }
            }
        }
        const bool lower_ok = lo_global >= 1.0 / K - tol;
        const bool upper_ok = hi_global <= K + tol;
        CheckEntry lower{"ellipticity lower", lower_ok, lo_global, 1.0 / K, ""};
        CheckEntry upper{"ellipticity upper", upper_ok, hi_global, K, ""};
        if (!lower_ok) {
            std::ostringstream os;
            os << point_string(g, lo_at);
            if (d == 2) os << " xi=(" << lo_dir[0] << "," << lo_dir[1] << ")";
            lower.witness = os.str();
        }
        if (!upper_ok) {
            std::ostringstream os;
            os << point_string(g, hi_at);
            if (d == 2) os << " xi=(" << hi_dir[0] << "," << hi_dir[1] << ")";
            upper.witness = os.str();
        }
        report.entries.push_back(lower);
        report.entries.push_back(upper);
        double min_k_ell = hi_global;
        min_k_ell = std::max(min_k_ell, lo_global > 0 ? 1.0 / lo_global : 1e300);
        report.minimal_passing_K = std::max(report.minimal_passing_K, min_k_ell);
    }

    // C^2 bounds: the modulated extremes scale b, c (a is unmodulated).
    {
        const double mod = coeffs.modulation.max_factor();
        double total = 0;
        for (const auto& f : coeffs.a) total += c2_norm_discrete(f);
        for (const auto& f : coeffs.b) total += mod * c2_norm_discrete(f);
        total += mod * c2_norm_discrete(coeffs.c);
        report.entries.push_back({"a,b,c C2 bound", total <= K + tol, total, K, ""});
        report.minimal_passing_K = std::max(report.minimal_passing_K, total);

        double bbar_total = 0;
        for (const auto& p : coeffs.b_bar) bbar_total += mod * c2_norm_profile(p, g.spacing());
        report.entries.push_back({"b-bar C2 bound", bbar_total <= K + tol, bbar_total, K, ""});
        report.minimal_passing_K = std::max(report.minimal_passing_K, bbar_total);
    }

    // bbar structure is enforced by the AxisProfile representation itself.
    report.entries.push_back({"b-bar axis independence", true, 0, 0, ""});

    report.entries.push_back(
        {"lambda positive", coeffs.lambda > 0, coeffs.lambda, 0, ""});

    return report;
}

std::optional<std::string> axis_independence_violation(const Field& f, int axis,
                                                       double rel_tol) {
    const GridSpec& g = f.grid;
    if (axis < 0 || axis >= g.dim)
        throw std::invalid_argument("axis_independence_violation: axis out of range");
    if (g.dim == 1) {
        // d=1: independent of x means constant.
        const double ref = f.values[0];
        const double scale = std::max(f.max_abs(), 1.0);
        for (std::size_t p = 1; p < f.size(); ++p)
            if (std::fabs(f.values[p] - ref) > rel_tol * scale)
                return "varies along coordinate 1 at " + point_string(g, p);
        return std::nullopt;
    }
    const double scale = std::max(f.max_abs(), 1.0);
    for (int other = 0; other < g.n; ++other) {
        const std::size_t base = axis == 0 ? g.index(0, other) : g.index(other, 0);
        const double ref = f.values[base];
        for (int own = 1; own < g.n; ++own) {
            const std::size_t p = axis == 0 ? g.index(own, other) : g.index(other, own);
            if (std::fabs(f.values[p] - ref) > rel_tol * scale)
                return "varies along coordinate " + std::to_string(axis + 1) + " at " +
                       point_string(g, p);
        }
    }
    return std::nullopt;
}

AxisProfile axis_profile_from_field(const Field& f, int axis) {
    if (auto why = axis_independence_violation(f, axis))
        throw std::invalid_argument("axis_profile_from_field: " + *why);
    const GridSpec& g = f.grid;
    AxisProfile p;
    p.axis = axis;
    if (g.dim == 1) {
        p.values = {f.values[0]};
        return p;
    }
    p.values.resize(g.n);
    for (int other = 0; other < g.n; ++other)
        p.values[other] = f.values[axis == 0 ? g.index(0, other) : g.index(other, 0)];
    return p;
}

PsiWeight psi_weight(const GridSpec& g, double k) {
    if (!(k > 0)) throw std::invalid_argument("psi_weight: k must be positive");
    PsiWeight w;
    w.k = k;
    w.values = Field(g);
    if (g.dim == 1) {
        for (int i = 0; i < g.n; ++i)
            w.values.values[i] = 1.0 / std::cosh(g.min_image_radius(i) / k);
    } else {
        for (int j = 0; j < g.n; ++j)
            for (int i = 0; i < g.n; ++i)
                w.values.values[g.index(i, j)] =
                    1.0 / std::cosh(g.min_image_radius(i, j) / k);
    }
    return w;
}

double psi_bracket_threshold(double m, double lambda) {
    const double b = 3.0 + std::pow(2.0 * m, lambda);
    return 0.5 * (b + std::sqrt(b * b + 8.0));
}

InequalityReport verify_psi_inequality(const CoefficientSet& coeffs, double k, double m) {
    if (!(k > 0) || !(m > 0))
        throw std::invalid_argument("verify_psi_inequality: k and m must be positive");
    const GridSpec& g = coeffs.grid;
    const int d = g.dim;
    const double K = coeffs.K;
    const double mod = coeffs.modulation.max_factor();

    InequalityReport rep;
    rep.k = k;
    rep.m = m;
    rep.bracket = 2.0 / (k * k) + (3.0 + std::pow(2.0 * m, coeffs.lambda)) / k - 1.0;
    rep.threshold_k = psi_bracket_threshold(m, coeffs.lambda);

    const Field psi = psi_weight(g, k).values;
    const double vmax = cutoff_drift_peak(m, coeffs.lambda);

    // lhs = sum_ij D2_ij(a^ij psi) - sum_i D_i(b^i psi) + worst-case taming
    //       advection + (c - 4K) psi
    Field lhs(g);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Field prod(g);
            const Field& aij = coeffs.a_entry(i, j);
            for (std::size_t p = 0; p < g.size(); ++p)
                prod.values[p] = aij.values[p] * psi.values[p];
            Field der = (i == j) ? second_difference(prod, i) : cross_difference(prod, i, j);
            for (std::size_t p = 0; p < g.size(); ++p) lhs.values[p] += der.values[p];
        }
    for (int i = 0; i < d; ++i) {
        Field prod(g);
        for (std::size_t p = 0; p < g.size(); ++p)
            prod.values[p] = coeffs.b[i].values[p] * psi.values[p];
        Field der = central_gradient(prod, i);
        for (std::size_t p = 0; p < g.size(); ++p)
            lhs.values[p] -= der.values[p] - (mod - 1.0) * std::fabs(der.values[p]);
    }
    for (int i = 0; i < d; ++i) {
        Field dpsi = central_gradient(psi, i);
        for (std::size_t p = 0; p < g.size(); ++p)
            lhs.values[p] += mod * std::fabs(coeffs.b_bar[i].at_flat(g, p)) * vmax *
                             std::fabs(dpsi.values[p]);
    }
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double cv = coeffs.c.values[p];
        const double c_worst = cv >= 0 ? mod * cv : cv / mod;
        lhs.values[p] += (c_worst - 4.0 * K) * psi.values[p];
    }

    rep.min_margin = 1e300;
    rep.pass = true;
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double rhs = K * psi.values[p] * rep.bracket;
        const double margin = rhs - lhs.values[p];
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_index = p;
        }
    }
    if (rep.min_margin < -1e-12) rep.pass = false;
    return rep;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["check"] = "assumptions";
    j["pass"] = all_pass();
    j["minimal_passing_K"] = minimal_passing_K;
    nlohmann::json items = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json it;
        it["name"] = e.name;
        it["pass"] = e.pass;
        it["statistic"] = e.statistic;
        it["bound"] = e.bound;
        if (!e.witness.empty()) it["witness"] = e.witness;
        items.push_back(it);
    }
    j["entries"] = items;
    return j.dump(2);
}

std::string InequalityReport::to_json() const {
    nlohmann::json j;
    j["check"] = "psi_inequality";
    j["pass"] = pass;
    j["parameters"] = {{"k", k}, {"m", m}};
    j["statistic"] = min_margin;
    j["bound"] = 0.0;
    j["margin"] = min_margin;
    j["bracket"] = bracket;
    j["threshold_k"] = threshold_k;
    return j.dump(2);
}

} // namespace spdelab
